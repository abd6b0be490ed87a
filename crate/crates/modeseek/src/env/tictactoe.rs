//! Tic-tac-toe against a uniform random opponent. The board is a 9-vector
//! over {−1, 0, +1} (row-major), the learner plays O = +1 and moves first.
//! Win, loss and draw detection run through a fixed 9×8 0/1 state matrix
//! whose columns are the three rows, three columns and two diagonals: a
//! line sum of ±3 is a win, and a draw is declared as soon as every line
//! contains at least one token of each sign (no line can ever be completed).

use crate::error::{Error, Result};
use crate::nn::{forward, softmax_over_valid, Activation, FlatParams, NetworkShape};
use crate::par::par_map;
use crate::rng::RngHandle;

/// Cell and action values: O = +1 (the learner, first mover), X = −1.
pub type Board = [i8; 9];

/// The 9×8 line-incidence matrix: rows index board cells (row-major),
/// columns index the 8 winning lines.
pub const STATE_MATRIX: [[i8; 8]; 9] = [
    [1, 0, 0, 1, 0, 0, 1, 0],
    [1, 0, 0, 0, 1, 0, 0, 0],
    [1, 0, 0, 0, 0, 1, 0, 1],
    [0, 1, 0, 1, 0, 0, 0, 0],
    [0, 1, 0, 0, 1, 0, 1, 1],
    [0, 1, 0, 0, 0, 1, 0, 0],
    [0, 0, 1, 1, 0, 0, 0, 1],
    [0, 0, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 1, 1, 0],
];

/// Game-state evaluation m'S: the 8 line sums.
pub fn line_sums(board: &Board) -> [i8; 8] {
    let mut sums = [0i8; 8];
    for (cell, row) in board.iter().zip(&STATE_MATRIX) {
        if *cell != 0 {
            for (s, inc) in sums.iter_mut().zip(row) {
                *s += cell * inc;
            }
        }
    }
    sums
}

/// Terminal state of a board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameStatus {
    /// O (+1) has a completed line.
    OWins,
    /// X (−1) has a completed line.
    XWins,
    /// Every line is blocked: nobody can ever win.
    Draw,
    NonTerminal,
}

impl GameStatus {
    /// The ρ value of a terminal status.
    pub fn rho(self) -> Option<i8> {
        match self {
            GameStatus::OWins => Some(1),
            GameStatus::XWins => Some(-1),
            GameStatus::Draw => Some(0),
            GameStatus::NonTerminal => None,
        }
    }
}

/// Win/draw detection through the state matrix: any line sum of +3 (−3) is
/// an O (X) win; a draw holds when v₊'v₋ = 8, i.e. every line contains at
/// least one O and one X.
pub fn game_status(board: &Board) -> GameStatus {
    let sums = line_sums(board);
    if sums.iter().any(|&s| s == 3) {
        return GameStatus::OWins;
    }
    if sums.iter().any(|&s| s == -3) {
        return GameStatus::XWins;
    }
    // blocked-line indicators from the sign-split boards
    let mut blocked = 0;
    for line in 0..8 {
        let mut has_plus = false;
        let mut has_minus = false;
        for cell in 0..9 {
            if STATE_MATRIX[cell][line] == 1 {
                match board[cell] {
                    1 => has_plus = true,
                    -1 => has_minus = true,
                    _ => {}
                }
            }
        }
        if has_plus && has_minus {
            blocked += 1;
        }
    }
    if blocked == 8 {
        GameStatus::Draw
    } else {
        GameStatus::NonTerminal
    }
}

/// Empty cells, as 0-based board indices.
pub fn legal_actions(board: &Board) -> Vec<usize> {
    board
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| i)
        .collect()
}

/// Feature variant: I feeds the raw board, II appends the line sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TttVariant {
    I,
    II,
}

impl TttVariant {
    pub fn input_len(&self) -> usize {
        match self {
            TttVariant::I => 9,
            TttVariant::II => 17,
        }
    }

    /// Controller shape: two tanh hidden layers of three, nine raw logits.
    pub fn shape(&self) -> NetworkShape {
        NetworkShape::controller(self.input_len(), 9, Activation::Identity)
    }

    pub fn theta_dim(&self) -> usize {
        self.shape().param_count()
    }

    fn features(&self, board: &Board) -> Vec<f64> {
        let mut f: Vec<f64> = board.iter().map(|&c| c as f64).collect();
        if matches!(self, TttVariant::II) {
            f.extend(line_sums(board).iter().map(|&s| s as f64));
        }
        f
    }
}

/// The learner's move: masked softmax over the nine logits, argmax action
/// (lowest index on ties). Occupied cells get probability exactly zero.
pub fn player_action(board: &Board, theta: &FlatParams, variant: TttVariant) -> Result<usize> {
    let logits = forward(theta, &variant.features(board))?;
    let valid: Vec<bool> = board.iter().map(|&c| c == 0).collect();
    let (_, action) = softmax_over_valid(&logits, &valid)?;
    Ok(action)
}

/// The opponent's move: uniform over the empty cells.
pub fn opponent_action(board: &Board, rng: &mut RngHandle) -> Result<usize> {
    let legal = legal_actions(board);
    if legal.is_empty() {
        return Err(Error::NoValidAction);
    }
    Ok(legal[rng.below(legal.len())])
}

/// Who takes the learner's moves.
pub enum PlayerPolicy<'a> {
    Network {
        theta: &'a FlatParams,
        variant: TttVariant,
    },
    /// Uniform random baseline.
    UniformRandom,
}

/// One finished game: outcome plus both action logs.
#[derive(Debug, Clone)]
pub struct GameRecord {
    pub seed: u64,
    pub rho: i8,
    pub player_actions: Vec<usize>,
    pub opponent_actions: Vec<usize>,
}

/// Play a single seeded game. The player's and opponent's random draws use
/// separate sub-streams of the game seed; ρ is evaluated after every
/// placement by either side.
pub fn play_game(policy: &PlayerPolicy, seed: u64) -> Result<GameRecord> {
    let mut player_rng = RngHandle::substream(seed, 0);
    let mut opp_rng = RngHandle::substream(seed, 1);
    let mut board: Board = [0; 9];
    let mut record = GameRecord {
        seed,
        rho: 0,
        player_actions: Vec::with_capacity(5),
        opponent_actions: Vec::with_capacity(4),
    };
    loop {
        // learner places O
        let a = match policy {
            PlayerPolicy::Network { theta, variant } => player_action(&board, theta, *variant)?,
            PlayerPolicy::UniformRandom => opponent_action(&board, &mut player_rng)?,
        };
        debug_assert_eq!(board[a], 0);
        board[a] = 1;
        record.player_actions.push(a);
        if let Some(rho) = game_status(&board).rho() {
            record.rho = rho;
            return Ok(record);
        }
        // opponent places X
        let a = opponent_action(&board, &mut opp_rng)?;
        board[a] = -1;
        record.opponent_actions.push(a);
        if let Some(rho) = game_status(&board).rho() {
            record.rho = rho;
            return Ok(record);
        }
    }
}

/// Batch outcome over a seed list.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub win_fraction: f64,
    pub wins: usize,
    pub records: Vec<GameRecord>,
}

/// Play one seeded game per entry of `seeds` (in parallel) and tally the
/// learner's wins.
pub fn play_games(policy: &PlayerPolicy, seeds: &[u64]) -> Result<BatchOutcome> {
    let records: Result<Vec<GameRecord>> = match policy {
        PlayerPolicy::Network { theta, variant } => {
            let (theta, variant) = (*theta, *variant);
            par_map(seeds, |&s| {
                play_game(
                    &PlayerPolicy::Network { theta, variant },
                    s,
                )
            })
            .into_iter()
            .collect()
        }
        PlayerPolicy::UniformRandom => par_map(seeds, |&s| play_game(&PlayerPolicy::UniformRandom, s))
            .into_iter()
            .collect(),
    };
    let records = records?;
    let wins = records.iter().filter(|r| r.rho == 1).count();
    Ok(BatchOutcome {
        win_fraction: wins as f64 / seeds.len().max(1) as f64,
        wins,
        records,
    })
}

/// Build an out-of-sample seed set for a fixed θ: walk candidate seeds from
/// `seed_start` and keep those whose opponent action sequences are distinct
/// from all training sequences and from each other, stopping after
/// `target_count` hits. Gives up (with an error) after 10× the target.
pub fn build_test_set(
    train_records: &[GameRecord],
    target_count: usize,
    policy: &PlayerPolicy,
    seed_start: u64,
) -> Result<Vec<u64>> {
    let mut seen: std::collections::HashSet<Vec<usize>> = train_records
        .iter()
        .map(|r| r.opponent_actions.clone())
        .collect();
    let mut out = Vec::with_capacity(target_count);
    let cap = target_count.saturating_mul(10);
    let mut tried = 0usize;
    let mut seed = seed_start;
    while out.len() < target_count {
        if tried >= cap {
            return Err(Error::SearchCapExceeded { tried });
        }
        let rec = play_game(policy, seed)?;
        if seen.insert(rec.opponent_actions.clone()) {
            out.push(seed);
        }
        seed += 1;
        tried += 1;
    }
    Ok(out)
}
