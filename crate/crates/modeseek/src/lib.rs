//! Mode-seeking stochastic optimization for arbitrary (non-differentiable)
//! objectives.
//!
//! The toolkit trains small feed-forward neural controllers against
//! simulation objectives via a two-block MCMC sampler with tempered
//! pseudo-likelihoods, a blend-crossover genetic algorithm, plain random
//! search and MCMC/optimizer hybrids. Three game environments (an annular
//! drone-escape arena, tic-tac-toe against a random opponent and an S-17
//! blackjack table) plus a classification toy provide the objectives.
//!
//! All randomness flows through [`rng::RngHandle`], a seeded ChaCha8 stream,
//! so every run is reproducible bit-for-bit from its configuration.

pub mod diagnostics;
pub mod env;
pub mod error;
pub mod likelihood;
pub mod mcmc;
pub mod nn;
pub mod optim;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
