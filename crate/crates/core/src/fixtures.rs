//! Built-in instances used by tests, the CLI verifier and the examples.

use crate::graph::TaskGraph;
use crate::rat::Rat;

fn r(s: &str) -> Rat {
    s.parse().expect("literal is a valid rational")
}

/// Five-vertex instance with a cheap-looking dead end through `z`.
///
/// With bias 2 the agent walks `u -> z -> t` (cost 76) although the optimum
/// `u -> w -> t` costs 67.
pub fn s32() -> TaskGraph {
    TaskGraph::builder()
        .edge("u", "w", r("65"))
        .edge("w", "t", r("2"))
        .edge("u", "v", r("14"))
        .edge("v", "t", r("60.1"))
        .edge("u", "z", r("0"))
        .edge("z", "t", r("76"))
        .build("u", "t")
        .expect("fixture is valid")
}

/// Branching instance: the cheapest path is `s -> x -> t` (cost 6). With bias 2
/// the agent rates `x` at 12 and `v` at 11, moves to `v` expecting `v -> y -> t`,
/// then deviates to `z` and pays 21 in total.
pub fn branching() -> TaskGraph {
    TaskGraph::builder()
        .edge("s", "x", r("6"))
        .edge("x", "t", r("0"))
        .edge("s", "v", r("0"))
        .edge("v", "y", r("11"))
        .edge("y", "t", r("0"))
        .edge("v", "z", r("1/2"))
        .edge("z", "t", r("41/2"))
        .build("s", "t")
        .expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{perceived_cost, traverse_plain, BiasProfile};
    use crate::graph::shortest_to_sink;

    #[test]
    fn branching_matches_its_description() {
        let g = branching();
        let dist = shortest_to_sink(&g).unwrap();
        assert_eq!(dist.to_sink(g.source()), &r("6"));
        let profile = BiasProfile::new(r("2")).unwrap();
        let via = |to: &str| perceived_cost(&g, &dist, &profile, g.edge_by_names("s", to).unwrap());
        assert_eq!((via("x"), via("v")), (r("12"), r("11")));
        let trace = traverse_plain(&g, &profile).unwrap();
        assert_eq!(trace.total, r("21"));
        assert_eq!(trace.vertex_names(), ["s", "v", "z", "t"]);
    }
}
