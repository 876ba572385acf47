use super::*;

fn roundtrip(t: &GameTranscript) {
    let back = GameTranscript::from_json(&t.to_json()).unwrap();
    assert_eq!(&back, t);
    let again = readjudicate(&back, None).unwrap();
    assert_eq!(&again, t);
}

#[test]
fn copy_wins_every_kind_on_equal_algebras() {
    let atomic = GameConfig::new(GameKind::Atomic, 2, 1e-12, "M2", "M2", 1).formulas(&["n2(x1*x2 - x2*x1)", "reip(x1, x2^*)"]);
    let banach = GameConfig::new(GameKind::Banach, 2, 1e-9, "M2", "M2", 2);
    let unitary = GameConfig::new(GameKind::UnitaryGram, 6, 1e-12, "M4", "M4", 3);
    let repr = GameConfig::new(GameKind::Representability, 3, 1e-12, "M3", "M3", 4).players("haar", "copy");
    for cfg in [atomic, banach, unitary, repr] {
        let t = play(&cfg).unwrap();
        assert_eq!(t.verdict.winner, Player::Two, "{}: {}", cfg.kind, t.verdict.reason);
        if matches!(cfg.kind, GameKind::Atomic | GameKind::UnitaryGram) {
            assert!(t.margins.iter().all(|m| m.value == 0.0));
        }
        roundtrip(&t);
    }
}

#[test]
fn commutator_separates_abelian_from_m2() {
    let cfg = GameConfig::new(GameKind::Atomic, 2, 0.3, "C+C:1/2,1/2", "M2", 5)
        .formulas(&["n2(x1*x2 - x2*x1)"])
        .players("scripted:N:E12 + E21; N:diag(1,-1)", "haar");
    let t = play_atomic_game(&cfg).unwrap();
    assert_eq!(t.verdict.winner, Player::One);
    // Direct computation: [E12 + E21, diag(1,-1)] = 2(E21 - E12), a multiple of a unitary.
    assert!((t.margins[0].value - 2.0).abs() < 1e-14);
    let vacuous = GameConfig { epsilon: 10.0, ..cfg };
    assert_eq!(play(&vacuous).unwrap().verdict.winner, Player::Two);
}

#[test]
fn atomic_sort_violation_forfeits() {
    let cfg = GameConfig::new(GameKind::Atomic, 1, 0.5, "M2", "M2", 6)
        .formulas(&["n2(x1)"])
        .players("scripted:M:2*one", "copy");
    let t = play(&cfg).unwrap();
    assert!(t.verdict.forfeit);
    assert_eq!(t.verdict.winner, Player::Two);
}

#[test]
fn banach_dimension_forfeit() {
    let cfg = GameConfig::new(GameKind::Banach, 2, 0.5, "C", "M2", 7).players("scripted:N:E11; N:E12", "haar");
    let t = play_banach_game(&cfg).unwrap();
    assert!(t.verdict.forfeit, "{}", t.verdict.reason);
    assert_eq!(t.verdict.winner, Player::One);
    roundtrip(&t);
}

#[test]
fn banach_stalling_keeps_the_map() {
    let cfg = GameConfig::new(GameKind::Banach, 3, 0.1, "M2", "M2", 8).players("scripted:M:E11; stall; M:2*E11", "copy");
    let t = play(&cfg).unwrap();
    assert_eq!(t.verdict.winner, Player::Two);
    assert_eq!(t.final_map.as_ref().unwrap().dim, 1);
    assert_eq!(t.pairs().unwrap().len(), 1);
}

#[test]
fn banach_perturbed_copy_has_small_defects() {
    let delta = 1e-3;
    for seed in 0..3 {
        let cfg = GameConfig::new(GameKind::Banach, 2, 0.1, "M2", "M2", seed).players("haar", &format!("perturbed-copy:{delta}"));
        let t = play(&cfg).unwrap();
        assert_eq!(t.verdict.winner, Player::Two, "{}", t.verdict.reason);
        let r = t.final_map.as_ref().unwrap().report.clone().unwrap();
        assert!(r.fwd_defect < 0.05 && r.bwd_defect < 0.05, "{r:?}");
    }
}

#[test]
fn scalars_cannot_answer_orthogonal_unitaries() {
    let cfg = GameConfig::new(GameKind::UnitaryGram, 2, 0.5, "C", "M2", 9).players("scripted:N:one; N:diag(1,-1)", "gram-match");
    let t = play_unitary_game(&cfg).unwrap();
    assert_eq!(t.verdict.winner, Player::One);
    assert_eq!(t.margins[0].value, 1.0);
    roundtrip(&t);
}

#[test]
fn non_unitary_move_forfeits() {
    let cfg = GameConfig::new(GameKind::UnitaryGram, 1, 0.5, "M2", "M2", 10).players("scripted:M:E11", "copy");
    let t = play(&cfg).unwrap();
    assert!(t.verdict.forfeit);
    assert_eq!(t.verdict.winner, Player::Two);
}

#[test]
fn diagonal_pair_is_represented_exactly() {
    let cfg = GameConfig::new(GameKind::Representability, 2, 1e-12, "C+C:1/2,1/2", "M2", 11).players("scripted:M:one; M:diag(1,-1)", "solver");
    let t = play_representability_game(&cfg).unwrap();
    assert_eq!(t.verdict.winner, Player::Two, "{}", t.verdict.reason);
    let g = t.gram.as_ref().unwrap();
    assert_eq!(g.m, vec![vec![(1.0, 0.0), (0.0, 0.0)], vec![(0.0, 0.0), (1.0, 0.0)]]);
    assert_eq!(g.m, g.n);
}

#[test]
fn too_many_unitaries_lose_by_dimension() {
    let cfg = GameConfig::new(GameKind::Representability, 3, 0.5, "C+C+C", "C+C", 12);
    let t = play(&cfg).unwrap();
    assert!(t.verdict.forfeit);
    assert!(t.verdict.reason.contains("dimension"));
}

#[test]
fn readjudication_at_other_epsilon() {
    let cfg = GameConfig::new(GameKind::UnitaryGram, 3, 0.05, "M2", "M2", 13).players("haar", "haar");
    let t = play(&cfg).unwrap();
    let dev = t.margins[0].value;
    let loose = readjudicate(&t, Some(dev + 1.0)).unwrap();
    assert_eq!(loose.verdict.winner, Player::Two);
    let tight = readjudicate(&t, Some(dev / 2.0)).unwrap();
    assert_eq!(tight.verdict.winner, Player::One);
}

#[test]
fn bad_configs_are_rejected() {
    assert!(play(&GameConfig::new(GameKind::UnitaryGram, 0, 0.1, "M2", "M2", 0)).is_err());
    assert!(play(&GameConfig::new(GameKind::UnitaryGram, 1, 0.0, "M2", "M2", 0)).is_err());
    assert!(matches!(
        play(&GameConfig::new(GameKind::Banach, 1, 0.1, "M2", "M2", 0).players("haar", "gram-match")),
        Err(GameError::Unsupported { .. })
    ));
    assert!(matches!(
        play(&GameConfig::new(GameKind::Banach, 1, 0.1, "M2", "M2", 0).players("copy", "copy")),
        Err(GameError::Role { .. })
    ));
    let dependent = GameConfig::new(GameKind::Representability, 2, 0.1, "M2", "M2", 0).players("scripted:M:one; M:i", "solver");
    assert_eq!(play(&dependent), Err(GameError::DependentInput(2)));
}
