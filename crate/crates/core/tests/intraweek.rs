use usageval_core::instances::{random_instance, InstanceLimits};
use usageval_core::system_model::{balance_residual, production, stock_trajectory};
use usageval_core::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

fn check_feasible(x: f64, sol: &WeekSolution, block: &[HourlyUncertainty], model: &SystemModel) {
    let s = &model.storage;
    for (ctrl, unc) in sol.controls.iter().zip(block) {
        assert!(balance_residual(ctrl, unc) >= -1e-9);
        assert!(ctrl.pump >= 0.0 && ctrl.pump <= s.pump_max + 1e-12);
        assert!(ctrl.turb >= 0.0 && ctrl.turb <= s.turb_max + 1e-12);
        assert!(ctrl.ens >= 0.0);
        for (i, unit) in model.units.iter().enumerate() {
            let p = production(ctrl.commit[i], ctrl.modulation[i], unc.availability[i]);
            if ctrl.commit[i] && unc.availability[i] {
                assert!(p >= unit.p_min - 1e-12 && p <= unit.p_max + 1e-12);
            } else {
                assert_eq!(p, 0.0);
            }
        }
    }
    for level in stock_trajectory(x, &sol.controls, s) {
        assert!(s.contains(level, 1e-9), "stock {level} outside the box");
    }
}

#[test]
fn hd_matches_brute_force_on_random_instances() {
    for seed in 0..150 {
        let inst = random_instance(seed, InstanceLimits::default());
        let oracle = brute_force_week(
            inst.x,
            &inst.blocks,
            &inst.ctg,
            &inst.model,
            InformationStructure::Hd,
        )
        .unwrap();
        let sols: Vec<WeekSolution> = inst
            .blocks
            .iter()
            .map(|b| solve_week_hd(inst.x, b, &inst.ctg, &inst.model).unwrap())
            .collect();
        for (sol, b) in sols.iter().zip(&inst.blocks) {
            check_feasible(inst.x, sol, b, &inst.model);
        }
        let mean = sols.iter().map(|s| s.value).sum::<f64>() / sols.len() as f64;
        assert!(
            close(mean, oracle),
            "seed {seed}: solver {mean} oracle {oracle}"
        );
    }
}

#[test]
fn dhd_matches_brute_force_on_random_instances() {
    for seed in 1000..1150 {
        let inst = random_instance(seed, InstanceLimits::default());
        let oracle = brute_force_week(
            inst.x,
            &inst.blocks,
            &inst.ctg,
            &inst.model,
            InformationStructure::Dhd,
        )
        .unwrap();
        let sol = solve_week_dhd(inst.x, &inst.blocks, &inst.ctg, &inst.model).unwrap();
        assert!(
            close(sol.value, oracle),
            "seed {seed}: solver {} oracle {oracle}",
            sol.value
        );
        for (k, (ws, b)) in sol.per_scenario.iter().zip(&inst.blocks).enumerate() {
            check_feasible(inst.x, ws, b, &inst.model);
            for (h, ctrl) in ws.controls.iter().enumerate() {
                for (j, &i) in sol.slow_plan.units.iter().enumerate() {
                    assert_eq!(
                        ctrl.commit[i], sol.slow_plan.commit[h][j],
                        "scenario {k} deviates from plan"
                    );
                }
            }
            let re = evaluate_recourse(inst.x, &sol.slow_plan, b, &inst.ctg, &inst.model).unwrap();
            assert!(close(re.value, ws.value));
        }
        let hd_mean = inst
            .blocks
            .iter()
            .map(|b| {
                solve_week_hd(inst.x, b, &inst.ctg, &inst.model)
                    .unwrap()
                    .value
            })
            .sum::<f64>()
            / inst.blocks.len() as f64;
        assert!(hd_mean <= sol.value + 1e-9 * sol.value.abs().max(1.0));
    }
}

fn toy_limits() -> InstanceLimits {
    InstanceLimits {
        max_units: 2,
        max_hours: 3,
        max_scenarios: 3,
        max_cells: 6,
    }
}

#[test]
fn wphr_chain_holds_on_toy_trees() {
    let mut strict = 0;
    for seed in 0..60 {
        let mut inst = random_instance(5000 + seed, toy_limits());
        // common first hour so the tree branches later
        let first = inst.blocks[0][0].clone();
        for b in &mut inst.blocks {
            b[0] = first.clone();
        }
        let tree = ScenarioTree::from_scenarios(&inst.blocks).unwrap();
        let n = inst.blocks.len() as f64;
        let hd = inst
            .blocks
            .iter()
            .map(|b| {
                solve_week_hd(inst.x, b, &inst.ctg, &inst.model)
                    .unwrap()
                    .value
            })
            .sum::<f64>()
            / n;
        let dhd = solve_week_dhd(inst.x, &inst.blocks, &inst.ctg, &inst.model)
            .unwrap()
            .value;
        let wphr = wphr_week_toy(inst.x, &tree, &inst.ctg, &inst.model).unwrap();
        let tol = 1e-9 * wphr.abs().max(1.0);
        assert!(hd <= dhd + tol, "seed {seed}: hd {hd} > dhd {dhd}");
        assert!(dhd <= wphr + tol, "seed {seed}: dhd {dhd} > wphr {wphr}");
        if wphr > dhd + 1e-6 * wphr.abs().max(1.0) {
            strict += 1;
        }
    }
    assert!(strict > 0, "no instance separates the structures");
}

#[test]
fn wphr_on_a_single_path_equals_dhd() {
    for seed in 0..40 {
        let inst = random_instance(7000 + seed, toy_limits());
        let block = &inst.blocks[0];
        let tree = ScenarioTree::from_scenarios(std::slice::from_ref(block)).unwrap();
        let dhd = solve_week_dhd(inst.x, std::slice::from_ref(block), &inst.ctg, &inst.model)
            .unwrap()
            .value;
        let hd = solve_week_hd(inst.x, block, &inst.ctg, &inst.model)
            .unwrap()
            .value;
        let wphr = wphr_week_toy(inst.x, &tree, &inst.ctg, &inst.model).unwrap();
        assert!(close(hd, dhd), "seed {seed}");
        assert!(close(dhd, wphr), "seed {seed}: dhd {dhd} wphr {wphr}");
    }
}

#[test]
fn guards_reject_large_instances() {
    let inst = random_instance(3, InstanceLimits::default());
    let mut big = inst.blocks[0].clone();
    while big.len() < 20 {
        big.push(big[0].clone());
    }
    let err = brute_force_week(
        inst.x,
        &[big.clone()],
        &inst.ctg,
        &inst.model,
        InformationStructure::Hd,
    );
    assert!(matches!(err, Err(Error::GuardExceeded(_))));
    let tree = ScenarioTree::from_scenarios(&[big]).unwrap();
    assert!(matches!(
        wphr_week_toy(inst.x, &tree, &inst.ctg, &inst.model),
        Err(Error::GuardExceeded(_))
    ));
}
