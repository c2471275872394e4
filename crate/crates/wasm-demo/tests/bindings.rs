use qensemble_wasm_demo::{chip_curve, ensemble_q_values, frame_size, render_script, script_outcome};

#[test]
fn curve_slope_matches_its_own_samples() {
    let pts = 401;
    let c = chip_curve(4, 2, 1, 0, pts).unwrap();
    assert_eq!(c.len(), 3 * pts);
    let h = c[3] - c[0];
    for i in 1..pts - 1 {
        let fd = (c[3 * (i + 1) + 1] - c[3 * (i - 1) + 1]) / (2.0 * h);
        assert!((fd - c[3 * i + 2]).abs() < 1e-3, "{fd} vs {}", c[3 * i + 2]);
        assert!(c[3 * i + 1].abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn curve_rejects_bad_shapes() {
    assert!(chip_curve(3, 2, 0, 0, 10).is_err());
    assert!(chip_curve(4, 2, 0, 4, 10).is_err());
}

#[test]
fn script_frames_and_outcome() {
    let n = frame_size() * frame_size();
    let frames = render_script("w w j").unwrap();
    assert_eq!(frames.len(), 4 * n);
    assert!(frames.iter().all(|&v| v <= 4));
    let out = script_outcome("www").unwrap();
    assert!((out[0] - 2.7).abs() < 1e-9);
    assert_eq!(out[1], 4.0);
    assert!(render_script("wx").is_err());
}

#[test]
fn frames_stop_at_episode_end() {
    let n = frame_size() * frame_size();
    // Walking into the first gap ends the episode early.
    let frames = render_script(&"w".repeat(40)).unwrap();
    assert!(frames.len() < 41 * n);
    assert_eq!(script_outcome(&"w".repeat(40)).unwrap()[2], 1.0);
}

#[test]
fn q_values_are_deterministic() {
    let a = ensemble_q_values(2, 4, 2, 3, "wj").unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(a, ensemble_q_values(2, 4, 2, 3, "wj").unwrap());
    assert_ne!(a, ensemble_q_values(2, 4, 2, 4, "wj").unwrap());
    assert!(ensemble_q_values(1, 4, 2, 3, "").is_ok());
}
