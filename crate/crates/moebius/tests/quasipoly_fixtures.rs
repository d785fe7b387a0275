use std::time::Instant;

use moebius::cache::CountTable;
use moebius::quasipoly::{closed_forms, evaluate, leading_part, reconstruct_with, wall_points, QuasiConfig};

#[test]
fn printed_pieces_and_continuity() {
    let table = CountTable::in_memory();
    let cfg = QuasiConfig::default();
    for (two_g, n) in [(0u32, 3u32), (1, 2), (2, 1), (0, 4), (1, 3), (2, 2), (3, 1)] {
        let t0 = Instant::now();
        let qp = reconstruct_with(two_g, n, &table, &cfg).unwrap();
        let compared = closed_forms::compare(&qp).unwrap();
        eprintln!("2g={two_g} n={n}: {} cells, {compared} pieces compared, {:?}", qp.cells.len(), t0.elapsed());
        assert!(compared > 0);
        for p in &qp.pieces {
            if p.chamber.parity.iter().map(|&x| x as u32).sum::<u32>() % 2 == 1 {
                assert!(p.poly.is_zero());
            } else {
                assert_eq!(p.poly.total_degree(), Some(qp.degree));
                assert!(p.poly.b_degree().unwrap() <= two_g as usize);
            }
        }
        leading_part(&qp).unwrap();
        for (x, a, b) in wall_points(&qp, 10, 7) {
            for p in qp.pieces.iter().filter(|p| p.chamber.cell == a) {
                let other = qp.piece(b, &p.chamber.parity).unwrap();
                assert_eq!(p.poly.eval(&x), other.eval(&x));
                assert_eq!(evaluate(&qp, &x, &p.chamber.parity).unwrap(), other.eval(&x));
            }
        }
    }
}
