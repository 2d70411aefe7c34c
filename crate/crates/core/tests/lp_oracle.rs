//! The simplex checked against brute-force vertex enumeration on small
//! bounded programs.

use mccwe_core::exactlp::{check_certificate, solve_lp, LinearProgram, LpStatus, Relation};
use mccwe_core::rational::int;
use mccwe_core::Rat;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Rows as `(coeffs, relation, rhs)` including the implicit `x >= 0`.
fn all_rows(lp: &LinearProgram) -> Vec<(Vec<Rat>, Relation, Rat)> {
    let n = lp.num_vars();
    let mut rows: Vec<_> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.relation, c.rhs.clone()))
        .collect();
    for j in 0..n {
        let mut e = vec![int(0); n];
        e[j] = int(1);
        rows.push((e, Relation::Ge, lp.lower_bounds[j].clone()));
    }
    rows
}

/// Solves the square system by Gauss-Jordan; `None` when singular.
fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone() / a[col][col].clone();
                for c in col..n {
                    let d = f.clone() * a[col][c].clone();
                    a[r][c] -= d;
                }
                let d = f * b[col].clone();
                b[r] -= d;
            }
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

fn feasible(rows: &[(Vec<Rat>, Relation, Rat)], x: &[Rat]) -> bool {
    rows.iter().all(|(a, rel, b)| {
        let lhs: Rat = a.iter().zip(x).map(|(p, q)| p * q).sum();
        match rel {
            Relation::Le => lhs <= *b,
            Relation::Ge => lhs >= *b,
            Relation::Eq => lhs == *b,
        }
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best objective over all basic feasible points, or `None` if there is none.
fn vertex_optimum(lp: &LinearProgram) -> Option<Rat> {
    let rows = all_rows(lp);
    let n = lp.num_vars();
    let mut best: Option<Rat> = None;
    for pick in combinations(rows.len(), n) {
        let a = pick.iter().map(|&r| rows[r].0.clone()).collect();
        let b = pick.iter().map(|&r| rows[r].2.clone()).collect();
        let Some(x) = solve_square(a, b) else {
            continue;
        };
        if !feasible(&rows, &x) {
            continue;
        }
        let v: Rat = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    best
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![
        4 => Just(Relation::Le),
        1 => Just(Relation::Ge),
        1 => Just(Relation::Eq),
    ]
}

/// Small programs with a box `x_j <= 6` so the feasible set is bounded.
fn bounded_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec(-4i64..=6, n),
            prop::collection::vec(
                (prop::collection::vec(-3i64..=4, n), relation(), -4i64..=10),
                0..=3,
            ),
        )
            .prop_map(move |(c, rows)| {
                let mut lp = LinearProgram::new(c.into_iter().map(int).collect());
                for (a, rel, b) in rows {
                    lp.add_constraint(a.into_iter().map(int).collect(), rel, int(b));
                }
                for j in 0..n {
                    let mut e = vec![int(0); n];
                    e[j] = int(1);
                    lp.add_constraint(e, Relation::Le, int(6));
                }
                lp
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in bounded_lp()) {
        let sol = solve_lp(&lp).unwrap();
        match vertex_optimum(&lp) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert_eq!(&sol.objective_value, &best);
                check_certificate(&lp, &sol).unwrap();
                let dual_value: Rat = lp
                    .constraints
                    .iter()
                    .zip(&sol.dual)
                    .map(|(c, y)| &c.rhs * y)
                    .sum();
                prop_assert_eq!(dual_value, best);
            }
        }
    }

    #[test]
    fn dual_signs_follow_relations(lp in bounded_lp()) {
        let sol = solve_lp(&lp).unwrap();
        if sol.status == LpStatus::Optimal {
            for (c, y) in lp.constraints.iter().zip(&sol.dual) {
                match c.relation {
                    Relation::Le => prop_assert!(!y.is_negative()),
                    Relation::Ge => prop_assert!(!y.is_positive()),
                    Relation::Eq => {}
                }
            }
        }
    }
}

#[test]
fn unbounded_direction_is_reported() {
    let mut lp = LinearProgram::new(vec![int(1), int(1)]);
    lp.add_constraint(vec![int(1), int(-1)], Relation::Le, int(2));
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn infeasible_system_is_reported() {
    let mut lp = LinearProgram::new(vec![int(1)]);
    lp.add_constraint(vec![int(1)], Relation::Ge, int(3));
    lp.add_constraint(vec![int(1)], Relation::Le, int(2));
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}
