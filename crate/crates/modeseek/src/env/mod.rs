//! Game environments providing the arbitrary objectives: drone navigation
//! through orbiting obstacles, tic-tac-toe against a random opponent, and
//! S-17 blackjack.

pub mod blackjack;
pub mod nav;
pub mod tictactoe;
