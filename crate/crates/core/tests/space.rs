use aerobench::problems::catalog::Catalog;
use aerobench::space::{DesignPoint, Domain, ParamSpace, Value, VarKind, VariableSpec};
use proptest::prelude::*;

fn variable(i: usize) -> impl Strategy<Value = VariableSpec> {
    let name = format!("v{i}");
    let (n1, n2, n3) = (name.clone(), name.clone(), name);
    prop_oneof![
        (-1e3..1e3f64, 1e-3..1e3f64).prop_map(move |(lo, w)| VariableSpec::continuous(&n1, lo, lo + w, "")),
        prop::collection::btree_set(-500i32..500, 2..7).prop_map(move |s| {
            let levels: Vec<f64> = s.into_iter().map(|x| x as f64 * 0.25).collect();
            VariableSpec::discrete(&n2, &levels, "")
        }),
        (2usize..6).prop_map(move |k| {
            let labels: Vec<String> = (0..k).map(|j| format!("L{j}")).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            VariableSpec::categorical(&n3, &refs)
        }),
    ]
}

fn space() -> impl Strategy<Value = ParamSpace> {
    (1usize..8)
        .prop_flat_map(|n| (0..n).map(variable).collect::<Vec<_>>())
        .prop_map(|vars| ParamSpace::new(vars).unwrap())
}

fn space_and_cube() -> impl Strategy<Value = (ParamSpace, Vec<f64>)> {
    space().prop_flat_map(|s| {
        let d = s.relaxed_dim();
        (Just(s), prop::collection::vec(0.0..=1.0f64, d))
    })
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn same_point(space: &ParamSpace, a: &DesignPoint, b: &DesignPoint) -> bool {
    space.variables().iter().all(|v| match (a.get(&v.name), b.get(&v.name)) {
        (Some(Value::Real(x)), Some(Value::Real(y))) if v.kind() == VarKind::Continuous => rel_close(*x, *y),
        (Some(x), Some(y)) => x == y,
        _ => false,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn normalize_inverts_denormalize((space, u) in space_and_cube(), seed in any::<u64>()) {
        let p = space.denormalize(&u).unwrap();
        let z = space.normalize(&p).unwrap();
        prop_assert_eq!(z.len(), space.relaxed_dim());
        prop_assert!(z.iter().all(|c| (0.0..=1.0).contains(c)));
        // a second trip changes nothing: exactly for level and one-hot
        // coordinates, to rounding for continuous ones
        let z2 = space.normalize(&space.denormalize(&z).unwrap()).unwrap();
        let continuous: Vec<bool> = space
            .variables()
            .iter()
            .flat_map(|v| vec![v.kind() == VarKind::Continuous; v.relaxed_width()])
            .collect();
        for ((a, b), c) in z.iter().zip(&z2).zip(&continuous) {
            if *c {
                prop_assert!(rel_close(*a, *b), "{} vs {}", a, b);
            } else {
                prop_assert_eq!(a, b);
            }
        }

        for p in space.sample_uniform(seed, 3) {
            let back = space.denormalize(&space.normalize(&p).unwrap()).unwrap();
            prop_assert!(same_point(&space, &p, &back), "{:?} -> {:?}", p, back);
        }
    }

    #[test]
    fn clip_is_idempotent((space, u) in space_and_cube(), shift in prop::collection::vec(-2e3..2e3f64, 8)) {
        let mut p = space.denormalize(&u).unwrap();
        for (var, s) in space.variables().iter().zip(&shift) {
            if let Some(Value::Real(x)) = p.values.get_mut(&var.name) {
                *x += s;
            }
        }
        let once = space.clip(&p).unwrap();
        prop_assert!(space.validate(&once).is_ok());
        prop_assert_eq!(space.clip(&once).unwrap(), once);
    }

    #[test]
    fn relaxed_dim_counts_one_hot_blocks(space in space()) {
        let expected: usize = space
            .variables()
            .iter()
            .map(|v| match &v.domain {
                Domain::Categorical { levels } => levels.len(),
                _ => 1,
            })
            .sum();
        prop_assert_eq!(space.relaxed_dim(), expected);
        if space.count(VarKind::Categorical) == 0 {
            prop_assert_eq!(space.relaxed_dim(), space.len());
        }
    }
}

#[test]
fn catalogue_spaces_round_trip() {
    let cat = Catalog::builtin();
    assert_eq!(cat.task("ceras_fuel").unwrap().space.relaxed_dim(), 12);
    for task in &cat.tasks {
        let s = &task.space;
        if s.count(VarKind::Continuous) == s.len() {
            assert_eq!(s.relaxed_dim(), s.len(), "{}", task.id);
        }
        for p in s.sample_uniform(7, 50) {
            let back = s.denormalize(&s.normalize(&p).unwrap()).unwrap();
            assert!(same_point(s, &p, &back), "{}", task.id);
        }
    }
}
