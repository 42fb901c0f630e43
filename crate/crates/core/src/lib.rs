//! Exact computations with divided-power Hopf algebroids over framed charts.

pub mod ring;
pub mod chart;
pub mod pdhopf;
pub mod conn;
pub mod cartier;
pub mod fontaine;
pub mod cohom;
pub mod selftest;
