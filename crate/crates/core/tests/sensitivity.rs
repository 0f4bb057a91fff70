mod common;

use exocal_core::kinematics::{DigitKind, ParamId};
use exocal_core::sensitivity::{perturb_sweep, posture_grid, rank_params, sweep_all};

use common::nominal;

#[test]
fn zero_perturbation_is_exactly_zero() {
    for digit in DigitKind::ALL {
        let (model, virt) = nominal(digit);
        let postures = posture_grid(&model, &virt, 4, 4).unwrap();
        for c in sweep_all(&model, &virt, &[-10.0, 0.0, 10.0], &postures).unwrap() {
            assert_eq!(c.at(0.0).unwrap().deviation_mm, 0.0, "{digit} {}", c.param);
        }
    }
}

#[test]
fn horizontal_offsets_dominate_on_the_index() {
    let (model, virt) = nominal(DigitKind::Index);
    let postures = posture_grid(&model, &virt, 5, 5).unwrap();
    let curves = sweep_all(&model, &virt, &[0.0, 10.0], &postures).unwrap();
    let dev = |p: ParamId| curves.iter().find(|c| c.param == p).unwrap().at(10.0).unwrap().deviation_mm;
    for (x, y) in [(ParamId::X1, ParamId::Y1), (ParamId::X2, ParamId::Y2), (ParamId::X3, ParamId::Y3)] {
        assert!(dev(x) > dev(y), "{x} {} vs {y} {}", dev(x), dev(y));
    }
    assert!((10.0..=40.0).contains(&dev(ParamId::X1)), "x1 at +10%: {}", dev(ParamId::X1));
}

#[test]
fn ranking_is_stable_under_posture_refinement() {
    let (model, virt) = nominal(DigitKind::Index);
    let grid = [0.0, 10.0];
    let rank = |a, b| {
        rank_params(&sweep_all(&model, &virt, &grid, &posture_grid(&model, &virt, a, b).unwrap()).unwrap(), 10.0)
            .unwrap()
    };
    let fine = rank(10, 10);
    assert_eq!(rank(5, 2), fine);
    assert_eq!(rank(20, 20), fine);
    // Two MCP samples miss the y3 peak, but every x still outranks its y.
    let coarse = rank(2, 5);
    let pos = |r: &[ParamId], p| r.iter().position(|q| *q == p).unwrap();
    for (x, y) in [(ParamId::X1, ParamId::Y1), (ParamId::X2, ParamId::Y2), (ParamId::X3, ParamId::Y3)] {
        assert!(pos(&coarse, x) < pos(&coarse, y));
    }
}

#[test]
fn deviation_is_continuous_near_zero() {
    let (model, virt) = nominal(DigitKind::Middle);
    let postures = posture_grid(&model, &virt, 4, 4).unwrap();
    let grid: Vec<f64> = (-20..=20).map(|i| f64::from(i) * 0.05).collect();
    for p in ParamId::for_digit(DigitKind::Middle) {
        let c = perturb_sweep(&model, &virt, *p, &grid, &postures).unwrap();
        let pts: Vec<_> = c.points.iter().filter(|q| q.feasible).collect();
        for w in pts.windows(2) {
            assert!((w[1].deviation_mm - w[0].deviation_mm).abs() < 0.5, "{p} jumps near {}%", w[0].pct);
        }
        let near = c.at(grid[21]).unwrap().deviation_mm;
        let far = c.at(grid[40]).unwrap().deviation_mm;
        assert!(near < far, "{p}: {near} !< {far}");
    }
}
