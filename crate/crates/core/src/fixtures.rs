//! Small hand-encoded layouts used by tests, docs and the acceptance suite.
//!
//! The 4x4 layout (K = 5, T = 4, U = 7) is
//!
//! ```text
//! A A U 3      positions:  0 1 . .
//! A A A A                  2 3 4 5
//! A 4 A U                  6 . 7 .
//! A A 5 U                  8 9 . .
//! ```

use crate::genotype::Genotype;
use crate::instance::{Instance, AGRICULTURAL};

pub fn figure_instance() -> Instance {
    #[rustfmt::skip]
    let categories = vec![
        2, 2, 1, 3,
        2, 2, 2, 2,
        2, 4, 2, 1,
        2, 2, 5, 1,
    ];
    let soil = categories
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            if k == AGRICULTURAL {
                1.0 + i as f64
            } else {
                0.0
            }
        })
        .collect();
    Instance::new(4, 4, categories, soil, 4).expect("fixture is valid")
}

/// Parent pair whose differing cells form three connected clusters, the
/// middle one mixing both directions of difference.
///
/// ```text
///  parent a      parent b
///  . a U 3       . . U 3
///  . . a a       . . . .
///  a 4 . U       b 4 b U
///  . . 5 U       b b 5 U
/// ```
pub fn figure_parents() -> (Genotype, Genotype) {
    let a = Genotype::from_positions(10, &[1, 4, 5, 6]);
    let b = Genotype::from_positions(10, &[6, 7, 8, 9]);
    (a, b)
}

/// Three conversions on the 4x4 layout, one short of the budget.
pub fn figure_deficient() -> Genotype {
    Genotype::from_positions(10, &[3, 4, 7])
}
