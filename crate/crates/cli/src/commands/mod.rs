pub mod audit;
pub mod cache;
pub mod geneval;
pub mod lexicon;
pub mod score;
pub mod serve;
pub mod tokfair;
