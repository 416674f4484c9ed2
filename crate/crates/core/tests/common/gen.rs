//! Random affine loop kernels over `a`, `b` and the parameter `n`.
//!
//! Loops start at 2 and offsets stay within [-2, 2], so no index is
//! negative; arrays of extent `n + 3` hold every touched cell.

use proptest::prelude::*;

#[derive(Clone, Debug)]
pub struct Kernel {
    pub rank: usize,
    pub text: String,
}

fn index(rank: usize) -> impl Strategy<Value = String> {
    let vars = ["i", "j"];
    (any::<bool>(), prop::collection::vec(prop_oneof![3 => Just(0i64), 2 => -2i64..=2], rank)).prop_map(move |(swap, offs)| {
        let order: Vec<usize> = if rank == 2 && swap { vec![1, 0] } else { (0..rank).collect() };
        let parts: Vec<String> = order
            .iter()
            .zip(&offs)
            .map(|(&d, &c)| match c {
                0 => vars[d].to_string(),
                c if c > 0 => format!("{} + {c}", vars[d]),
                c => format!("{} - {}", vars[d], -c),
            })
            .collect();
        parts.join(", ")
    })
}

fn array() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("a"), Just("b")]
}

fn statement(rank: usize) -> impl Strategy<Value = String> {
    (array(), index(rank), any::<bool>(), prop::collection::vec((array(), index(rank)), 1..=2)).prop_map(|(w, wi, aug, reads)| {
        let rhs: Vec<String> = reads.iter().map(|(r, ri)| format!("{r}[{ri}]")).collect();
        let op = if aug { "+=" } else { "=" };
        format!("{w}[{wi}] {op} {} * 0.5", rhs.join(" + "))
    })
}

pub fn kernel() -> impl Strategy<Value = Kernel> {
    (1usize..=2, any::<bool>())
        .prop_flat_map(|(rank, tri)| (Just(rank), Just(tri), prop::collection::vec(statement(rank), 1..=3)))
        .prop_map(|(rank, tri, stmts)| {
            let mut text = String::from("def k(a: ndarray, b: ndarray, n: int):\n    for i in range(2, n):\n");
            let mut pad = "        ";
            if rank == 2 {
                text.push_str(if tri { "        for j in range(i, n):\n" } else { "        for j in range(2, n):\n" });
                pad = "            ";
            }
            for s in stmts {
                text.push_str(pad);
                text.push_str(&s);
                text.push('\n');
            }
            Kernel { rank, text }
        })
}
