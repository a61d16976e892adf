//! Benchmark fixtures.

use polyrelax::{normalize, parse_problem, ProblemInstance};

pub const SQUARE: &str = "vars: x\nminimize: 4*x^2 - 4*x + 1\nst: x >= 0\nbox: 0 1\n";
pub const CONVEX_QP: &str = "vars: x1 x2\nminimize: x1^2 + x2^2\nst: x1 + x2 - 0.5 >= 0\nbox: 0 1\n";
pub const MAXCUT_K3: &str = "vars: x1 x2 x3\n\
minimize: -(x1 + x2 - 2*x1*x2) - (x1 + x3 - 2*x1*x3) - (x2 + x3 - 2*x2*x3)\n\
binary: x1 x2 x3\n";

pub fn load(text: &str) -> ProblemInstance {
    normalize(&parse_problem(text).expect("fixture parses")).expect("fixture normalizes")
}
