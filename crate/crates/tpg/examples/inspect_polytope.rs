//! Walks the constraint machinery on a small code: the odd subsets of each
//! check, the constraint order, the dense Q/R/D grids, and the penalty with
//! its gradient at a few hand-picked points.

use tpg::code::ParityCheckMatrix;
use tpg::polytope::{odd_subsets, ConstraintIndex, PolytopeMatrices};

const ALIST: &str = "6 3\n2 3\n1 1 2 2 1 1\n3 2 3\n1\n1\n1 2\n2 3\n3\n3\n1 2 3\n3 4\n4 5 6\n";

fn main() {
    let h = ParityCheckMatrix::parse_alist(ALIST).expect("alist parses");
    println!("code: n={} bits, m={} checks", h.n(), h.m());

    for i in 0..h.m() {
        let support: Vec<usize> = h.row_support(i).to_vec();
        let subsets = odd_subsets(&support).expect("degree within bounds");
        println!("check {i}: support {support:?}, odd subsets {subsets:?}");
    }

    let index = ConstraintIndex::build(&h).expect("builds");
    println!(
        "\n{} constraints in canonical order:",
        index.constraint_count()
    );
    for j in 0..index.constraint_count() {
        println!(
            "  {j}: check {} subset {:?}",
            index.check_of(j),
            index.subset_of(j)
        );
    }

    let mats = PolytopeMatrices::build(&h, &index);
    println!("\n{}", mats.dump_dense());

    for x in [
        vec![0.0, 1.0, 1.0, 1.0, 1.0, 0.0],
        vec![0.5; 6],
        vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0],
    ] {
        let p = mats.penalty(&x).expect("finite input");
        let g = mats.penalty_gradient(&x).expect("finite input");
        println!("x = {x:?}\n  penalty {p:.4}, gradient {g:?}");
    }
}
