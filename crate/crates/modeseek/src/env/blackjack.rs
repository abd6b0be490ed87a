//! S-17 blackjack: a seeded multi-deck shoe with deterministic reshuffle
//! seeding, hand valuation, settlement multipliers, legal-action rules
//! (split once, early surrender, double-after-split), Hi-Lo true count,
//! network and baseline decision policies, and network / threshold betting.
//!
//! A "night" is K hands against one shoe lineage: the shoe reshuffles
//! whenever fewer than half the cards remain, advancing the shuffle seed by
//! one each time, so a night is fully determined by its initial seed.

use crate::error::{Error, Result};
use crate::nn::{forward, softmax_over_valid, Activation, FlatParams, NetworkShape};
use crate::par::par_map;
use crate::rng::RngHandle;

/// Card value 1..=10; an ace is 1, face cards are 10.
pub type Card = u8;

pub const DEFAULT_DECKS: usize = 8;
const RANKS: [Card; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Cards per deck for a rank: sixteen tens (10, J, Q, K), four of the rest.
pub fn per_deck(rank: Card) -> usize {
    if rank == 10 {
        16
    } else {
        4
    }
}

/// A shuffled shoe drawn from the back, plus its shuffle seed lineage.
#[derive(Debug, Clone)]
pub struct Shoe {
    cards: Vec<Card>,
    pub decks: usize,
    pub seed: u64,
}

impl Shoe {
    /// Build a fresh `decks`-deck shoe and shuffle it with `seed`.
    pub fn fresh(decks: usize, seed: u64) -> Self {
        let mut cards = Vec::with_capacity(52 * decks);
        for rank in RANKS {
            for _ in 0..per_deck(rank) * decks {
                cards.push(rank);
            }
        }
        let mut rng = RngHandle::new(seed);
        // Fisher-Yates
        for i in (1..cards.len()).rev() {
            let j = rng.below(i + 1);
            cards.swap(i, j);
        }
        Self { cards, decks, seed }
    }

    pub fn draw(&mut self) -> Card {
        self.cards.pop().expect("shoe exhausted")
    }

    pub fn remaining(&self) -> usize {
        self.cards.len()
    }

    /// Reshuffle trigger: fewer than half the shoe remains.
    pub fn needs_reshuffle(&self) -> bool {
        self.remaining() < 52 * self.decks / 2
    }
}

/// Hand value: the ace counts 11 when that keeps the total at or below 21.
pub fn hand_value(cards: &[Card]) -> u32 {
    let sum: u32 = cards.iter().map(|&c| c as u32).sum();
    if cards.contains(&1) && sum + 10 <= 21 {
        sum + 10
    } else {
        sum
    }
}

/// A usable ace is one currently counted as 11.
pub fn has_usable_ace(cards: &[Card]) -> bool {
    let sum: u32 = cards.iter().map(|&c| c as u32).sum();
    cards.contains(&1) && sum + 10 <= 21
}

/// Player actions in the fixed logit order used by network policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Stay,
    Hit,
    Split,
    Surrender,
    DoubleDown,
}

pub const ACTION_ORDER: [Action; 5] = [
    Action::Stay,
    Action::Hit,
    Action::Split,
    Action::Surrender,
    Action::DoubleDown,
];

/// Legal actions for a (possibly split) hand holding `cards`. Stay and Hit
/// are always available pre-bust; split only on an unsplit two-card pair;
/// surrender and double-down only on the first two cards, with surrender
/// barred after a split (double-after-split stays legal).
pub fn legal_actions_bj(cards: &[Card], is_split_hand: bool) -> Vec<Action> {
    let mut actions = vec![Action::Stay, Action::Hit];
    if cards.len() == 2 {
        if !is_split_hand && cards[0] == cards[1] {
            actions.push(Action::Split);
        }
        if !is_split_hand {
            actions.push(Action::Surrender);
        }
        actions.push(Action::DoubleDown);
    }
    actions
}

/// Decision-network features: (hand value / 21, upcard / 10, usable ace).
pub fn decision_features(cards: &[Card], upcard: Card) -> [f64; 3] {
    [
        hand_value(cards) as f64 / 21.0,
        upcard as f64 / 10.0,
        if has_usable_ace(cards) { 1.0 } else { 0.0 },
    ]
}

/// Shape of the decision network: 3 features, two tanh hidden layers of
/// three, five raw logits in [`ACTION_ORDER`].
pub fn decision_shape() -> NetworkShape {
    NetworkShape::controller(3, 5, Activation::Identity)
}

/// Running Hi-Lo count state over the cards seen since the last shuffle.
#[derive(Debug, Clone, Default)]
pub struct CardCounts {
    counts: [u32; 11],
    total: u32,
    running: i64,
}

impl CardCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, card: Card) {
        self.counts[card as usize] += 1;
        self.total += 1;
        self.running += match card {
            2..=6 => 1,
            7..=9 => 0,
            _ => -1, // tens and aces
        };
    }

    pub fn observe_all(&mut self, cards: &[Card]) {
        for &c in cards {
            self.observe(c);
        }
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    pub fn seen(&self) -> u32 {
        self.total
    }

    pub fn count_of(&self, rank: Card) -> u32 {
        self.counts[rank as usize]
    }

    pub fn running_count(&self) -> i64 {
        self.running
    }
}

/// True count: the running Hi-Lo count divided by the number of cards still
/// in the shoe (not by remaining decks).
pub fn true_count(history: &CardCounts, decks: usize) -> Result<f64> {
    let shoe_size = 52 * decks as u32;
    if history.seen() >= shoe_size {
        return Err(Error::Domain("no cards remain in the shoe".into()));
    }
    Ok(history.running_count() as f64 / (shoe_size - history.seen()) as f64)
}

/// Bet-network input variant: the scaled true count alone, or the full
/// eleven-feature card-composition vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetVariant {
    I,
    II,
}

impl BetVariant {
    pub fn input_len(&self) -> usize {
        match self {
            BetVariant::I => 1,
            BetVariant::II => 11,
        }
    }

    /// Bet network: tanh hidden layers of three, one sigmoid output.
    pub fn shape(&self) -> NetworkShape {
        NetworkShape::controller(self.input_len(), 1, Activation::Sigmoid)
    }

    pub fn theta_dim(&self) -> usize {
        self.shape().param_count()
    }
}

/// The eleven bet features: scaled true count, then the remaining
/// value-weighted mass of each rank 2..9, tens, and aces.
pub fn bet_features(history: &CardCounts, decks: usize) -> Result<[f64; 11]> {
    let tc = true_count(history, decks)?;
    let d0 = decks as f64;
    let mut f = [0.0f64; 11];
    f[0] = tc / 3.0;
    for (slot, rank) in (2u8..=9).enumerate() {
        let i = rank as f64;
        let initial = 4.0 * i * d0;
        f[1 + slot] = (initial - i * history.count_of(rank) as f64) / initial;
    }
    let initial_tens = 16.0 * 10.0 * d0;
    f[9] = (initial_tens - 10.0 * history.count_of(10) as f64) / initial_tens;
    let initial_aces = 4.0 * 11.0 * d0;
    f[10] = (initial_aces - 11.0 * history.count_of(1) as f64) / initial_aces;
    Ok(f)
}

/// Stake from the bet network: sigmoid propensity mapped onto the table
/// range [1, 10]. A fresh shoe (zero true count, empty history) bypasses
/// the network and bets the minimum.
pub fn bet_size(
    theta: &FlatParams,
    history: &CardCounts,
    decks: usize,
    variant: BetVariant,
) -> Result<f64> {
    if history.seen() == 0 {
        return Ok(1.0);
    }
    let features = bet_features(history, decks)?;
    let input: &[f64] = match variant {
        BetVariant::I => &features[..1],
        BetVariant::II => &features[..],
    };
    let bet = forward(theta, input)?[0];
    Ok(1.0 + 9.0 * bet)
}

/// Settlement multiplier of one played-out (sub-)hand relative to its base
/// stake. Doubling doubles both win and loss; a natural (un-split two-card
/// 21) pays 3:2 unless the dealer's first two cards are also 21; pushes pay
/// nothing and a surrendered hand loses half.
pub fn settle(
    player: &[Card],
    doubled: bool,
    surrendered: bool,
    is_split_hand: bool,
    dealer_all: &[Card],
    dealer_two: &[Card],
) -> f64 {
    if surrendered {
        return -0.5;
    }
    let mult = if doubled { 2.0 } else { 1.0 };
    let pv = hand_value(player);
    if pv > 21 {
        return -mult;
    }
    let natural = pv == 21 && player.len() == 2 && !is_split_hand;
    let dealer_natural = hand_value(dealer_two) == 21;
    if natural && !dealer_natural {
        return 1.5;
    }
    let dv = hand_value(dealer_all);
    if dv > 21 || pv > dv {
        mult
    } else if pv < dv {
        -mult
    } else {
        0.0
    }
}

/// Parsed basic-strategy chart.
#[derive(Debug, Clone)]
pub struct StrategyChart {
    hard: std::collections::HashMap<u32, [ChartCell; 10]>,
    soft: std::collections::HashMap<u32, [ChartCell; 10]>,
    pair: std::collections::HashMap<Card, [ChartCell; 10]>,
    surrender: std::collections::HashMap<u32, [ChartCell; 10]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChartCell {
    Hit,
    Stand,
    DoubleElseHit,
    DoubleElseStand,
    Split,
    Surrender,
    None,
}

/// The chart shipped with the crate.
pub const BASIC_STRATEGY_TEXT: &str = include_str!("data/basic_strategy.txt");

impl StrategyChart {
    pub fn standard() -> Self {
        Self::parse(BASIC_STRATEGY_TEXT).expect("bundled chart parses")
    }

    /// Parse a chart file: `[hard]`, `[soft]`, `[pair]`, `[surrender]`
    /// sections; one row key followed by ten cells per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut chart = StrategyChart {
            hard: Default::default(),
            soft: Default::default(),
            pair: Default::default(),
            surrender: Default::default(),
        };
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            let mut parts = line.split_whitespace();
            let key: u32 = parts
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::MissingChartEntry(format!("bad key at line {lineno}")))?;
            let cells: Vec<ChartCell> = parts
                .map(|p| match p {
                    "H" => Ok(ChartCell::Hit),
                    "S" => Ok(ChartCell::Stand),
                    "D" => Ok(ChartCell::DoubleElseHit),
                    "DS" => Ok(ChartCell::DoubleElseStand),
                    "P" => Ok(ChartCell::Split),
                    "R" => Ok(ChartCell::Surrender),
                    "-" => Ok(ChartCell::None),
                    other => Err(Error::MissingChartEntry(format!(
                        "unknown cell {other} at line {lineno}"
                    ))),
                })
                .collect::<Result<_>>()?;
            if cells.len() != 10 {
                return Err(Error::MissingChartEntry(format!(
                    "line {lineno}: expected 10 cells, got {}",
                    cells.len()
                )));
            }
            let row: [ChartCell; 10] = cells.try_into().unwrap();
            match section.as_str() {
                "hard" => {
                    chart.hard.insert(key, row);
                }
                "soft" => {
                    chart.soft.insert(key, row);
                }
                "pair" => {
                    chart.pair.insert(key as Card, row);
                }
                "surrender" => {
                    chart.surrender.insert(key, row);
                }
                other => {
                    return Err(Error::MissingChartEntry(format!(
                        "cells outside a known section: {other}"
                    )))
                }
            }
        }
        Ok(chart)
    }

    fn upcard_column(upcard: Card) -> usize {
        match upcard {
            1 => 9,
            v => v as usize - 2,
        }
    }

    /// Chart decision for the current hand. Resolution order: split when the
    /// pair table says so, then surrender, then the soft/hard total tables
    /// with double falling back to hit or stand when no longer legal.
    pub fn decide(
        &self,
        cards: &[Card],
        upcard: Card,
        legal: &[Action],
    ) -> Result<Action> {
        let col = Self::upcard_column(upcard);
        let value = hand_value(cards);
        if legal.contains(&Action::Split) {
            if let Some(row) = self.pair.get(&cards[0]) {
                if row[col] == ChartCell::Split {
                    return Ok(Action::Split);
                }
            }
        }
        if legal.contains(&Action::Surrender) && !has_usable_ace(cards) {
            if let Some(row) = self.surrender.get(&value) {
                if row[col] == ChartCell::Surrender {
                    return Ok(Action::Surrender);
                }
            }
        }
        let table = if has_usable_ace(cards) {
            &self.soft
        } else {
            &self.hard
        };
        let row = table.get(&value).ok_or_else(|| {
            Error::MissingChartEntry(format!(
                "no row for value {value} (soft = {})",
                has_usable_ace(cards)
            ))
        })?;
        let action = match row[col] {
            ChartCell::Hit => Action::Hit,
            ChartCell::Stand => Action::Stay,
            ChartCell::DoubleElseHit => {
                if legal.contains(&Action::DoubleDown) {
                    Action::DoubleDown
                } else {
                    Action::Hit
                }
            }
            ChartCell::DoubleElseStand => {
                if legal.contains(&Action::DoubleDown) {
                    Action::DoubleDown
                } else {
                    Action::Stay
                }
            }
            other => {
                return Err(Error::MissingChartEntry(format!(
                    "unexpected cell {other:?} for value {value}"
                )))
            }
        };
        Ok(action)
    }
}

/// Who plays the hands.
pub enum DecisionPolicy<'a> {
    Network(&'a FlatParams),
    BasicStrategy(&'a StrategyChart),
    /// Mimic an S-17 dealer: hit below 17, stand on every 17.
    S17,
    /// Stand on 17 except soft 17, which hits.
    H17,
    /// Uniform over the legal actions.
    PurelyRandom,
    /// Uniform over {Stay, Hit}.
    RandomStayHit,
}

impl<'a> DecisionPolicy<'a> {
    /// Pick an action for the current (partial) hand.
    pub fn decide(
        &self,
        cards: &[Card],
        upcard: Card,
        legal: &[Action],
        rng: &mut RngHandle,
    ) -> Result<Action> {
        match self {
            DecisionPolicy::Network(theta) => {
                let logits = forward(theta, &decision_features(cards, upcard))?;
                let valid: Vec<bool> = ACTION_ORDER.iter().map(|a| legal.contains(a)).collect();
                let (_, idx) = softmax_over_valid(&logits, &valid)?;
                Ok(ACTION_ORDER[idx])
            }
            DecisionPolicy::BasicStrategy(chart) => chart.decide(cards, upcard, legal),
            DecisionPolicy::S17 => Ok(if hand_value(cards) < 17 {
                Action::Hit
            } else {
                Action::Stay
            }),
            DecisionPolicy::H17 => {
                let v = hand_value(cards);
                Ok(if v < 17 || (v == 17 && has_usable_ace(cards)) {
                    Action::Hit
                } else {
                    Action::Stay
                })
            }
            DecisionPolicy::PurelyRandom => Ok(legal[rng.below(legal.len())]),
            DecisionPolicy::RandomStayHit => Ok(if rng.uniform() < 0.5 {
                Action::Stay
            } else {
                Action::Hit
            }),
        }
    }
}

/// How the stake of each hand is chosen.
pub enum BetPolicy<'a> {
    Unit,
    Network {
        theta: &'a FlatParams,
        variant: BetVariant,
    },
    /// `bet = TC/3 · 1(TC > threshold)`, clamped into the propensity range.
    TcThreshold(f64),
}

impl<'a> BetPolicy<'a> {
    pub fn stake(&self, history: &CardCounts, decks: usize) -> Result<f64> {
        match self {
            BetPolicy::Unit => Ok(1.0),
            BetPolicy::Network { theta, variant } => bet_size(theta, history, decks, *variant),
            BetPolicy::TcThreshold(x) => {
                if history.seen() == 0 {
                    return Ok(1.0);
                }
                let tc = true_count(history, decks)?;
                let bet = if tc > *x { (tc / 3.0).clamp(0.0, 1.0) } else { 0.0 };
                Ok(1.0 + 9.0 * bet)
            }
        }
    }
}

/// One hand's outcome inside a night.
#[derive(Debug, Clone)]
pub struct HandRecord {
    /// Net settlement multiplier (summed over split sub-hands).
    pub settlement: f64,
    /// Stake placed before the deal.
    pub stake: f64,
    /// Cards revealed during the hand, in observation order.
    pub seen: Vec<Card>,
}

struct SubHand {
    cards: Vec<Card>,
    doubled: bool,
    surrendered: bool,
    is_split: bool,
    done: bool,
}

/// Play a single hand against the shoe. Naturals stand automatically;
/// split hands each receive a second card immediately and play in order.
fn play_hand(
    shoe: &mut Shoe,
    decision: &DecisionPolicy,
    rng: &mut RngHandle,
) -> Result<(f64, Vec<Card>)> {
    let p1 = shoe.draw();
    let upcard = shoe.draw();
    let p2 = shoe.draw();
    let hole = shoe.draw();
    let mut hands = vec![SubHand {
        cards: vec![p1, p2],
        doubled: false,
        surrendered: false,
        is_split: false,
        done: false,
    }];
    let natural = hand_value(&hands[0].cards) == 21;
    if natural {
        hands[0].done = true;
    }
    let mut i = 0;
    while i < hands.len() {
        while !hands[i].done {
            if hand_value(&hands[i].cards) > 21 {
                hands[i].done = true;
                break;
            }
            let legal = legal_actions_bj(&hands[i].cards, hands[i].is_split);
            let action = decision.decide(&hands[i].cards, upcard, &legal, rng)?;
            if !legal.contains(&action) {
                return Err(Error::Domain(format!(
                    "policy returned illegal action {action:?}"
                )));
            }
            match action {
                Action::Stay => hands[i].done = true,
                Action::Hit => {
                    let c = shoe.draw();
                    hands[i].cards.push(c);
                    if hand_value(&hands[i].cards) > 21 {
                        hands[i].done = true;
                    }
                }
                Action::Surrender => {
                    hands[i].surrendered = true;
                    hands[i].done = true;
                }
                Action::DoubleDown => {
                    let c = shoe.draw();
                    hands[i].cards.push(c);
                    hands[i].doubled = true;
                    hands[i].done = true;
                }
                Action::Split => {
                    let c2 = hands[i].cards.pop().unwrap();
                    let d1 = shoe.draw();
                    let d2 = shoe.draw();
                    hands[i].cards.push(d1);
                    hands[i].is_split = true;
                    hands.push(SubHand {
                        cards: vec![c2, d2],
                        doubled: false,
                        surrendered: false,
                        is_split: true,
                        done: false,
                    });
                }
            }
        }
        i += 1;
    }
    // dealer plays only when some hand awaits comparison
    let needs_dealer = hands
        .iter()
        .any(|h| !h.surrendered && hand_value(&h.cards) <= 21 && !(natural));
    let mut dealer = vec![upcard, hole];
    let dealer_two = [upcard, hole];
    if needs_dealer {
        while hand_value(&dealer) < 17 {
            dealer.push(shoe.draw());
        }
    }
    let mut settlement = 0.0;
    for h in &hands {
        settlement += settle(
            &h.cards,
            h.doubled,
            h.surrendered,
            h.is_split,
            &dealer,
            &dealer_two,
        );
    }
    let mut seen: Vec<Card> = Vec::with_capacity(8);
    for h in &hands {
        seen.extend_from_slice(&h.cards);
    }
    seen.extend_from_slice(&dealer);
    Ok((settlement, seen))
}

/// Night-level outcome.
#[derive(Debug, Clone)]
pub struct NightOutcome {
    /// Σ settlementₖ·stakeₖ / Σ stakeₖ.
    pub roi: f64,
    /// Wins over decisive hands (settlement ≠ 0).
    pub hit_rate: f64,
    pub hands: Vec<HandRecord>,
    /// Shuffle seeds consumed, in order.
    pub shoe_seeds: Vec<u64>,
}

/// Play K hands against one shoe lineage. Reshuffles fire before a hand
/// whenever the shoe is past penetration, advancing the seed by one and
/// resetting the count history.
pub fn play_night(
    decision: &DecisionPolicy,
    bet: &BetPolicy,
    hands: usize,
    seed: u64,
    decks: usize,
) -> Result<NightOutcome> {
    let mut shoe = Shoe::fresh(decks, seed);
    let mut shoe_seeds = vec![seed];
    let mut history = CardCounts::new();
    // random policies draw from a dedicated sub-stream of the night seed
    let mut policy_rng = RngHandle::substream(seed, 7);
    let mut records = Vec::with_capacity(hands);
    let mut total_reward = 0.0;
    let mut total_stake = 0.0;
    let (mut decisive, mut hits) = (0usize, 0usize);
    for _ in 0..hands {
        if shoe.needs_reshuffle() {
            let next = shoe.seed + 1;
            shoe = Shoe::fresh(decks, next);
            shoe_seeds.push(next);
            history.clear();
        }
        let stake = bet.stake(&history, decks)?;
        let (settlement, seen) = play_hand(&mut shoe, decision, &mut policy_rng)?;
        history.observe_all(&seen);
        total_reward += settlement * stake;
        total_stake += stake;
        if settlement != 0.0 {
            decisive += 1;
            if settlement > 0.0 {
                hits += 1;
            }
        }
        records.push(HandRecord {
            settlement,
            stake,
            seen,
        });
    }
    Ok(NightOutcome {
        roi: if total_stake > 0.0 {
            total_reward / total_stake
        } else {
            0.0
        },
        hit_rate: if decisive > 0 {
            hits as f64 / decisive as f64
        } else {
            0.0
        },
        hands: records,
        shoe_seeds,
    })
}

/// Per-night (ROI, hit-rate) over many seeded nights, in parallel.
pub fn evaluate_nights(
    decision: &DecisionPolicy,
    bet: &BetPolicy,
    hands: usize,
    seeds: &[u64],
    decks: usize,
) -> Result<Vec<(f64, f64)>> {
    let results: Vec<Result<(f64, f64)>> = par_map(seeds, |&s| {
        play_night(decision, bet, hands, s, decks).map(|o| (o.roi, o.hit_rate))
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoe_composition_and_conservation() {
        let mut shoe = Shoe::fresh(8, 42);
        assert_eq!(shoe.remaining(), 416);
        let mut counts = [0usize; 11];
        let snapshot: Vec<Card> = shoe.cards.clone();
        for c in snapshot {
            counts[c as usize] += 1;
        }
        for rank in RANKS {
            assert_eq!(counts[rank as usize], per_deck(rank) * 8);
        }
        // conservation while drawing
        let mut drawn = [0usize; 11];
        for _ in 0..200 {
            drawn[shoe.draw() as usize] += 1;
        }
        let mut left = [0usize; 11];
        for &c in &shoe.cards {
            left[c as usize] += 1;
        }
        for rank in RANKS {
            assert_eq!(
                drawn[rank as usize] + left[rank as usize],
                per_deck(rank) * 8
            );
        }
    }

    #[test]
    fn shoe_shuffle_deterministic() {
        let a = Shoe::fresh(8, 7);
        let b = Shoe::fresh(8, 7);
        let c = Shoe::fresh(8, 8);
        assert_eq!(a.cards, b.cards);
        assert_ne!(a.cards, c.cards);
    }

    #[test]
    fn hand_values() {
        assert_eq!(hand_value(&[1, 10]), 21);
        assert_eq!(hand_value(&[1, 10, 5]), 16);
        assert_eq!(hand_value(&[5, 6]), 11);
        assert_eq!(hand_value(&[1, 1]), 12);
        assert_eq!(hand_value(&[1, 1, 10, 9]), 21);
    }

    /// Brute-force oracle over per-ace interpretations: every ace counts 1
    /// or 11, take the largest valid total, else the smallest overall.
    fn oracle_value(cards: &[Card]) -> u32 {
        let aces = cards.iter().filter(|&&c| c == 1).count();
        let base: u32 = cards.iter().map(|&c| c as u32).sum();
        let mut best_valid: Option<u32> = None;
        let mut min_total = u32::MAX;
        for k in 0..=aces {
            let total = base + 10 * k as u32;
            min_total = min_total.min(total);
            if total <= 21 {
                best_valid = Some(best_valid.map_or(total, |b: u32| b.max(total)));
            }
        }
        best_valid.unwrap_or(min_total)
    }

    #[test]
    fn hand_value_matches_oracle_for_all_multisets_up_to_8() {
        // enumerate nondecreasing card multisets
        fn recurse(cards: &mut Vec<Card>, min: Card, checked: &mut usize) {
            if !cards.is_empty() {
                assert_eq!(
                    hand_value(cards),
                    oracle_value(cards),
                    "hand {cards:?}"
                );
                *checked += 1;
            }
            if cards.len() == 8 {
                return;
            }
            for c in min..=10 {
                cards.push(c);
                recurse(cards, c, checked);
                cards.pop();
            }
        }
        let mut cards = Vec::new();
        let mut checked = 0usize;
        recurse(&mut cards, 1, &mut checked);
        assert_eq!(checked, 43_757);
    }

    #[test]
    fn legal_action_sets() {
        let all = legal_actions_bj(&[8, 8], false);
        assert_eq!(all.len(), 5);
        let three = legal_actions_bj(&[8, 9], false);
        assert!(three.contains(&Action::Surrender) && three.contains(&Action::DoubleDown));
        assert!(!three.contains(&Action::Split));
        let two = legal_actions_bj(&[8, 9, 2], false);
        assert_eq!(two, vec![Action::Stay, Action::Hit]);
        // split hands may double but not surrender or re-split
        let das = legal_actions_bj(&[8, 8], true);
        assert!(das.contains(&Action::DoubleDown));
        assert!(!das.contains(&Action::Surrender));
        assert!(!das.contains(&Action::Split));
    }

    #[test]
    fn feature_triples() {
        let f = decision_features(&[1, 6], 10);
        assert!((f[0] - 17.0 / 21.0).abs() < 1e-15);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], 1.0);
        let f = decision_features(&[10, 6], 2);
        assert!((f[0] - 16.0 / 21.0).abs() < 1e-15);
        assert!((f[1] - 0.2).abs() < 1e-15);
        assert_eq!(f[2], 0.0);
        let f = decision_features(&[1, 10, 10], 5);
        assert_eq!(f[0], 1.0);
        assert!((f[1] - 0.5).abs() < 1e-15);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn true_count_values() {
        let mut h = CardCounts::new();
        assert_eq!(true_count(&h, 8).unwrap(), 0.0);
        h.observe(5);
        assert!((true_count(&h, 8).unwrap() - 1.0 / 415.0).abs() < 1e-12);
        // RC = 10 after 208 cards
        let mut h = CardCounts::new();
        for _ in 0..10 {
            h.observe(2);
        }
        for _ in 0..99 {
            h.observe(7);
            h.observe(8);
        }
        assert_eq!(h.seen(), 208);
        assert_eq!(h.running_count(), 10);
        assert!((true_count(&h, 8).unwrap() - 10.0 / 208.0).abs() < 1e-12);
    }

    #[test]
    fn bet_size_cases() {
        let theta = FlatParams::zeros(BetVariant::II.shape());
        let fresh = CardCounts::new();
        assert_eq!(bet_size(&theta, &fresh, 8, BetVariant::II).unwrap(), 1.0);
        let mut h = CardCounts::new();
        h.observe(7);
        // zero network: sigmoid(0) = 0.5 → stake 5.5
        assert!((bet_size(&theta, &h, 8, BetVariant::II).unwrap() - 5.5).abs() < 1e-12);
        // saturated positive output bias → stake ~10
        let shape = BetVariant::I.shape();
        let mut values = vec![0.0; shape.param_count()];
        let last = values.len() - 1;
        values[last] = 100.0;
        let sat = FlatParams::new(values, shape).unwrap();
        assert!((bet_size(&sat, &h, 8, BetVariant::I).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn bet_features_in_unit_interval() {
        let mut h = CardCounts::new();
        let mut shoe = Shoe::fresh(8, 3);
        for _ in 0..200 {
            h.observe(shoe.draw());
        }
        let f = bet_features(&h, 8).unwrap();
        for x in &f[1..] {
            assert!((0.0..=1.0).contains(x), "feature {x}");
        }
    }

    #[test]
    fn settlement_cases() {
        // player 20 beats dealer 19
        assert_eq!(settle(&[10, 10], false, false, false, &[10, 9], &[10, 9]), 1.0);
        // natural vs dealer 20
        assert_eq!(settle(&[1, 10], false, false, false, &[10, 10], &[10, 10]), 1.5);
        // natural vs dealer 3-card 21 still pays 3:2
        assert_eq!(
            settle(&[1, 10], false, false, false, &[5, 6, 10], &[5, 6]),
            1.5
        );
        // natural vs dealer natural pushes
        assert_eq!(settle(&[1, 10], false, false, false, &[1, 10], &[1, 10]), 0.0);
        // bust after double with 3 cards
        assert_eq!(settle(&[10, 6, 9], true, false, false, &[10, 9], &[10, 9]), -2.0);
        // doubled win pays 2, doubled loss to a valid dealer hand costs 2
        assert_eq!(settle(&[5, 6, 10], true, false, false, &[10, 9], &[10, 9]), 2.0);
        assert_eq!(settle(&[5, 6, 7], true, false, false, &[10, 9], &[10, 9]), -2.0);
        // dealer bust
        assert_eq!(
            settle(&[10, 8], false, false, false, &[10, 6, 10], &[10, 6]),
            1.0
        );
        // surrender
        assert_eq!(settle(&[10, 6], false, true, false, &[10, 9], &[10, 9]), -0.5);
        // push
        assert_eq!(settle(&[10, 9], false, false, false, &[10, 9], &[10, 9]), 0.0);
        // split 21 in two cards is not a natural
        assert_eq!(settle(&[1, 10], false, false, true, &[10, 9], &[10, 9]), 1.0);
    }

    #[test]
    fn settlement_in_allowed_set() {
        let allowed = [2.0, 1.5, 1.0, -2.0, -1.0, -0.5, 0.0];
        let mut rng = RngHandle::new(5);
        let chart = StrategyChart::standard();
        for seed in 0..300u64 {
            let mut shoe = Shoe::fresh(8, seed);
            let (s, _) = play_hand(&mut shoe, &DecisionPolicy::BasicStrategy(&chart), &mut rng)
                .unwrap();
            // per-hand settlements combine at most two sub-hands
            let ok = allowed.contains(&s)
                || allowed
                    .iter()
                    .any(|a| allowed.iter().any(|b| (a + b - s).abs() < 1e-12));
            assert!(ok, "settlement {s}");
        }
    }

    #[test]
    fn unit_roi_formula() {
        // s sequence (+1, −1, +1.5, 0) with unit stakes: ROI = 1.5/4
        let rewards = [1.0, -1.0, 1.5, 0.0];
        let roi: f64 = rewards.iter().sum::<f64>() / 4.0;
        assert!((roi - 0.375).abs() < 1e-15);
    }

    #[test]
    fn dealer_never_hits_17_always_hits_16() {
        // direct mechanism fuzz over the dealer drawing rule
        for seed in 0..2000u64 {
            let mut shoe = Shoe::fresh(1, seed);
            let mut dealer = vec![shoe.draw(), shoe.draw()];
            while hand_value(&dealer) < 17 {
                dealer.push(shoe.draw());
            }
            let v = hand_value(&dealer);
            assert!(v >= 17);
            // removing the last draw must leave a sub-17 total
            if dealer.len() > 2 {
                let before = &dealer[..dealer.len() - 1];
                assert!(hand_value(before) < 17);
            }
        }
    }

    #[test]
    fn s17_h17_policy_thresholds() {
        let mut rng = RngHandle::new(1);
        let legal = vec![Action::Stay, Action::Hit];
        let s17 = DecisionPolicy::S17;
        assert_eq!(s17.decide(&[10, 6], 5, &legal, &mut rng).unwrap(), Action::Hit);
        assert_eq!(s17.decide(&[10, 7], 5, &legal, &mut rng).unwrap(), Action::Stay);
        // soft 17 stands under S17, hits under H17
        assert_eq!(s17.decide(&[1, 6], 5, &legal, &mut rng).unwrap(), Action::Stay);
        let h17 = DecisionPolicy::H17;
        assert_eq!(h17.decide(&[1, 6], 5, &legal, &mut rng).unwrap(), Action::Hit);
        assert_eq!(h17.decide(&[10, 7], 5, &legal, &mut rng).unwrap(), Action::Stay);
    }

    #[test]
    fn basic_strategy_chart_entries() {
        let chart = StrategyChart::standard();
        let legal5 = legal_actions_bj(&[8, 8], false);
        assert_eq!(
            chart.decide(&[8, 8], 10, &legal5).unwrap(),
            Action::Split,
            "always split eights"
        );
        let legal = legal_actions_bj(&[10, 6], false);
        assert_eq!(chart.decide(&[10, 6], 10, &legal).unwrap(), Action::Surrender);
        assert_eq!(chart.decide(&[10, 6], 6, &legal).unwrap(), Action::Stay);
        let legal = legal_actions_bj(&[6, 5], false);
        assert_eq!(chart.decide(&[6, 5], 6, &legal).unwrap(), Action::DoubleDown);
        // 11 vs ace hits under S-17
        assert_eq!(chart.decide(&[6, 5], 1, &legal).unwrap(), Action::Hit);
        // soft 18 vs 3 doubles, stands without the option
        let legal = legal_actions_bj(&[1, 7], false);
        assert_eq!(chart.decide(&[1, 7], 3, &legal).unwrap(), Action::DoubleDown);
        let legal3 = vec![Action::Stay, Action::Hit];
        assert_eq!(chart.decide(&[1, 7], 3, &legal3).unwrap(), Action::Stay);
        // 5,5 never splits: doubles vs 9
        let legal = legal_actions_bj(&[5, 5], false);
        assert_eq!(chart.decide(&[5, 5], 9, &legal).unwrap(), Action::DoubleDown);
    }

    #[test]
    fn purely_random_uniform_over_legal() {
        let mut rng = RngHandle::new(2);
        let legal = legal_actions_bj(&[8, 8], false);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..50_000 {
            let a = DecisionPolicy::PurelyRandom
                .decide(&[8, 8], 5, &legal, &mut rng)
                .unwrap();
            *counts.entry(format!("{a:?}")).or_insert(0usize) += 1;
        }
        for (_, c) in counts {
            assert!((c as f64 / 50_000.0 - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn night_deterministic_and_reshuffles() {
        let chart = StrategyChart::standard();
        let a = play_night(
            &DecisionPolicy::BasicStrategy(&chart),
            &BetPolicy::Unit,
            500,
            2024,
            8,
        )
        .unwrap();
        let b = play_night(
            &DecisionPolicy::BasicStrategy(&chart),
            &BetPolicy::Unit,
            500,
            2024,
            8,
        )
        .unwrap();
        assert_eq!(a.roi, b.roi);
        assert_eq!(a.hit_rate, b.hit_rate);
        assert!(a.shoe_seeds.len() > 1, "500 hands must trigger reshuffles");
        assert_eq!(a.shoe_seeds, b.shoe_seeds);
        // seeds advance deterministically by one
        for w in a.shoe_seeds.windows(2) {
            assert_eq!(w[1], w[0] + 1);
        }
    }

    #[test]
    fn unit_no_double_no_split_contribution_bounds() {
        // the Stay/Hit-only random policy can neither double nor split
        let out = play_night(
            &DecisionPolicy::RandomStayHit,
            &BetPolicy::Unit,
            2000,
            5,
            8,
        )
        .unwrap();
        for h in &out.hands {
            assert!(h.settlement >= -1.0 && h.settlement <= 1.5);
            assert_eq!(h.stake, 1.0);
        }
    }

    #[test]
    fn tc_threshold_policy_stakes() {
        let mut h = CardCounts::new();
        // strongly positive count: 60 low cards seen from 8 decks
        for _ in 0..60 {
            h.observe(3);
        }
        let tc = true_count(&h, 8).unwrap();
        assert!(tc > 0.0);
        let pol = BetPolicy::TcThreshold(0.0);
        let stake = pol.stake(&h, 8).unwrap();
        assert!((stake - (1.0 + 9.0 * (tc / 3.0).clamp(0.0, 1.0))).abs() < 1e-12);
        // below threshold bets the minimum
        let pol = BetPolicy::TcThreshold(tc + 1.0);
        assert_eq!(pol.stake(&h, 8).unwrap(), 1.0);
        // fresh shoe bets the minimum
        assert_eq!(
            BetPolicy::TcThreshold(0.0)
                .stake(&CardCounts::new(), 8)
                .unwrap(),
            1.0
        );
    }

    #[test]
    fn baseline_rates_are_ordered_sensibly() {
        // quick smoke: basic strategy beats mimic-the-dealer, which beats
        // random, on ROI over a modest number of hands
        let chart = StrategyChart::standard();
        let seeds: Vec<u64> = (0..40).map(|i| 1000 + i * 1000).collect();
        let eval = |d: &DecisionPolicy| -> f64 {
            let rs = evaluate_nights(d, &BetPolicy::Unit, 1000, &seeds, 8).unwrap();
            rs.iter().map(|r| r.0).sum::<f64>() / rs.len() as f64
        };
        let basic = eval(&DecisionPolicy::BasicStrategy(&chart));
        let s17 = eval(&DecisionPolicy::S17);
        let random = eval(&DecisionPolicy::PurelyRandom);
        assert!(basic > s17, "basic {basic} vs s17 {s17}");
        assert!(s17 > random, "s17 {s17} vs random {random}");
    }
}
