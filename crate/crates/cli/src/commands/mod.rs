pub mod algebra;
pub mod coherent;
pub mod contract;
pub mod coset;
pub mod evolve;
