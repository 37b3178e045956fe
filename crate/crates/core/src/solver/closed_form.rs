use crate::lattice::{Grid, InstantonData};

/// Exact solutions known in closed form, scaled by `lambda`.
///
/// Covers `(2,2)`, `(2,4)`, `(4,2)` and the degenerate families with
/// `n1 = 1` or `n2 = 1`; `None` for every other size or for `lambda <= 0`.
pub fn closed_form(n1: usize, n2: usize, lambda: f64) -> Option<InstantonData> {
    if !(lambda > 0.0 && lambda.is_finite()) || n1 == 0 || n2 == 0 {
        return None;
    }
    let l = lambda;
    let s2 = std::f64::consts::SQRT_2;
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let data = match (n1, n2) {
        (1, _) | (_, 1) => InstantonData::constant(n1, n2, l),
        (2, 2) => InstantonData::new(
            2,
            2,
            Grid::filled(2, 1, l),
            Grid::filled(1, 2, l),
            l * s2,
            l * s2,
        ),
        (2, 4) => InstantonData::new(
            2,
            4,
            Grid::from_rows(vec![vec![l * s2], vec![l], vec![l], vec![l * s2]])?,
            Grid::from_rows(vec![
                vec![2.0 * l, l * s2],
                vec![l * s3, l * s3],
                vec![l * s2, 2.0 * l],
            ])?,
            l * s6,
            l * s6,
        ),
        (4, 2) => return closed_form(2, 4, lambda).map(|d| swap(&d)),
        _ => return None,
    };
    data.ok()
}

/// Exchanges the roles of `n1` and `n2`: `F'(j,k) = G(k,j)`, `G'(j,k) = F(k,j)`,
/// with `a0` and `b0` exchanged.
///
/// Solutions map to solutions of the swapped system (on solutions `a0 = b0`).
pub fn swap(data: &InstantonData) -> InstantonData {
    InstantonData::new(
        data.n2(),
        data.n1(),
        data.g().transposed(),
        data.f().transposed(),
        data.b0(),
        data.a0(),
    )
    .expect("transposed extents match the swapped shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_solve_the_system() {
        for (n1, n2) in [(2, 2), (2, 4), (4, 2), (1, 1), (1, 5), (6, 1)] {
            for lambda in [0.5, 1.0, 3.0] {
                let d = closed_form(n1, n2, lambda).unwrap();
                let report = d.residual_report();
                assert!(
                    report.max_abs < 1e-13 * lambda * lambda * 10.0,
                    "({n1},{n2}) {}",
                    report.max_abs
                );
            }
        }
    }

    #[test]
    fn unknown_sizes_are_absent() {
        assert!(closed_form(3, 3, 1.0).is_none());
        assert!(closed_form(2, 3, 1.0).is_none());
        assert!(closed_form(2, 2, -1.0).is_none());
    }

    #[test]
    fn two_by_two_values() {
        let d = closed_form(2, 2, 1.0).unwrap();
        assert!(d.f().iter().chain(d.g().iter()).all(|&v| v == 1.0));
        assert_eq!(d.a0(), std::f64::consts::SQRT_2);
        assert_eq!(swap(&d), d);
    }

    #[test]
    fn degenerate_column() {
        let d = closed_form(1, 4, 1.0).unwrap();
        assert_eq!(d.f().len(), 0);
        assert_eq!(d.g().dims(), (3, 1));
        assert_eq!((d.a0(), d.b0()), (1.0, 1.0));
    }

    #[test]
    fn swap_is_an_involution() {
        let d = closed_form(2, 4, 1.3).unwrap();
        assert_eq!(swap(&swap(&d)), d);
        let s = swap(&d);
        assert_eq!((s.n1(), s.n2()), (4, 2));
        assert!(s.residual_report().max_abs < 1e-13);
    }
}
