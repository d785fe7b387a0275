use moebius::cache::CountTable;
use moebius::mpoly::MPoly;
use moebius::quasipoly::{walls, QuasiConfig};
use moebius::rational::{q, qi};
use moebius::volume::{check_volume_recursion, volume_rhs, VolumeBook};
use moebius::Q;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generic_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    loop {
        let l: Vec<Q> = (0..n).map(|_| q(rng.gen_range(1..200), rng.gen_range(1..12))).collect();
        let generic = walls(n).iter().all(|w| {
            let s: Q = w.iter().zip(&l).map(|(&a, x)| qi(a as i64) * x).sum();
            !s.is_zero()
        });
        if generic {
            return l;
        }
    }
}

#[test]
fn recursion_holds_at_random_points() {
    let table = CountTable::in_memory();
    let book = VolumeBook::new(&table, QuasiConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (two_g, n) in [(0u32, 4u32), (1, 3), (2, 2), (3, 1)] {
        let pts: Vec<Vec<Q>> = (0..6).map(|_| generic_point(&mut rng, n as usize)).collect();
        check_volume_recursion(&book, two_g, n, &pts).unwrap();
    }
}

#[test]
fn four_holes_per_chamber() {
    // agreement on a 3x3x3x3 tensor grid inside a chamber pins down the local
    // quadratic polynomial, for every choice of the distinguished boundary
    let table = CountTable::in_memory();
    let book = VolumeBook::new(&table, QuasiConfig::default());
    let v = book.get(0, 4).unwrap();
    let x: Vec<MPoly> = (0..4).map(|i| MPoly::var(4, i)).collect();
    let want = x.iter().fold(MPoly::zero(4), |a, y| &a + &(y * y)).scale(&q(1, 4));
    for cell in &v.cells {
        for first in 0..4 {
            let mut vals = Vec::new();
            let mut grid = Vec::new();
            for k in 0..81usize {
                let ks = [k % 3, k / 3 % 3, k / 9 % 3, k / 27];
                let l: Vec<Q> = (0..4).map(|i| &cell.point[i] * qi(100_000) + qi(ks[i] as i64)).collect();
                for (w, &s) in v.walls.iter().zip(&cell.signs) {
                    let val: Q = w.iter().zip(&l).map(|(&a, x)| qi(a as i64) * x).sum();
                    assert_eq!(val > Q::zero(), s > 0, "grid point left its chamber");
                }
                grid.push(l);
            }
            for l in &grid {
                let mut perm = l.clone();
                perm.swap(0, first);
                vals.push(volume_rhs(&book, 0, 4, &perm).unwrap());
            }
            for (l, val) in grid.iter().zip(&vals) {
                assert_eq!(val, &want.eval(l));
            }
            assert!(vals.iter().all(|v| !v.is_zero()));
        }
    }
}
