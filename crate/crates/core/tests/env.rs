use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

use proptest::prelude::*;
use qensemble::env::{Action, Frame, Observation, Platformer, WorldSpec, FRAME_SIZE, OBSERVATION_LEN, STACK_DEPTH};
use qensemble::features::Featurize;

const TILE: usize = 12;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Compares against a checked-in PGM; set `QENSEMBLE_BLESS=1` to rewrite it.
fn check_golden(frame: &Frame, name: &str) {
    let path = golden(name);
    if std::env::var_os("QENSEMBLE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, frame.to_pgm()).unwrap();
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let expect = Frame::from_pgm(&text).unwrap();
    assert_eq!(&expect, frame, "{name} differs from golden");
}

/// Paints a frame straight from the world text: 7×7 tiles of 12 px, the
/// window starts one column left of the agent, short worlds sit at the bottom.
fn painted(world_text: &str, agent_x: usize, altitude: usize) -> Vec<u8> {
    let rows: Vec<Vec<char>> = world_text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with(';'))
        .map(|l| l.trim_end().chars().collect())
        .collect();
    let pad = 7 - rows.len();
    let mut px = vec![0u8; FRAME_SIZE * FRAME_SIZE];
    let mut fill = |tr: usize, tc: usize, v: u8| {
        for r in tr * TILE..(tr + 1) * TILE {
            for c in tc * TILE..(tc + 1) * TILE {
                px[r * FRAME_SIZE + c] = v;
            }
        }
    };
    for tc in 0..7 {
        let Some(x) = (agent_x + tc).checked_sub(1) else {
            continue;
        };
        for (r, row) in rows.iter().enumerate() {
            let v = match row.get(x) {
                Some('#') => 2,
                Some('B') => 3,
                Some('F') => 1,
                _ => 0,
            };
            if v > 0 {
                fill(pad + r, tc, v);
            }
        }
    }
    fill(6 - altitude, 1, 4);
    px
}

#[test]
fn start_frame_matches_golden_and_painter() {
    let mut env = Platformer::new(WorldSpec::default_world());
    let obs = env.reset(0);
    let frame = &obs.frames()[STACK_DEPTH - 1];
    check_golden(frame, "default_start.pgm");
    let (x, alt) = env.position();
    assert_eq!(
        frame.levels(),
        painted(qensemble::env::DEFAULT_WORLD, x, alt).as_slice()
    );
}

#[test]
fn frames_along_a_scripted_run_match_painter() {
    let mut env = Platformer::new(WorldSpec::default_world());
    env.reset(0);
    for a in [
        Action::WalkRight,
        Action::JumpRight,
        Action::JumpRight,
        Action::WalkRight,
        Action::WalkRight,
    ] {
        let r = env.step(a).unwrap();
        let (x, alt) = env.position();
        let last = &r.observation.frames()[STACK_DEPTH - 1];
        assert_eq!(last.levels(), painted(qensemble::env::DEFAULT_WORLD, x, alt).as_slice());
        if r.done {
            break;
        }
    }
}

#[test]
fn mid_jump_frame_matches_golden() {
    let mut env = Platformer::new(WorldSpec::default_world());
    env.reset(0);
    env.step(Action::JumpRight).unwrap();
    let r = env.step(Action::WalkRight).unwrap();
    assert!(r.info.altitude > 1, "apex of the arc is above ground");
    check_golden(&r.observation.frames()[STACK_DEPTH - 1], "default_jump_apex.pgm");
}

#[test]
fn observation_contract() {
    let mut env = Platformer::new(WorldSpec::default_world());
    let obs = env.reset(3);
    assert_eq!(Observation::shape(), [4, 84, 84]);
    let flat = obs.flatten();
    assert_eq!(flat.len(), OBSERVATION_LEN);
    assert_eq!(OBSERVATION_LEN, 28_224);
    assert!(flat.iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(obs.features().to_dense(), flat);
    let first = &obs.frames()[0];
    assert!(obs.frames().iter().all(|f| f == first), "reset repeats the first frame");
}

#[test]
fn frames_shift_oldest_first() {
    let mut env = Platformer::new(WorldSpec::default_world());
    let o0 = env.reset(0);
    let o1 = env.step(Action::WalkRight).unwrap().observation;
    let o2 = env.step(Action::WalkRight).unwrap().observation;
    assert_eq!(o2.frames()[2], o1.frames()[3]);
    assert_eq!(o2.frames()[1], o0.frames()[3]);
    assert_ne!(o2.frames()[3], o1.frames()[3]);
}

type Key = (usize, usize, usize);

/// Breadth-first search over emulator states; returns an action script to
/// the flag if one exists.
fn plan_to_flag(world: WorldSpec) -> Option<Vec<Action>> {
    let mut start = Platformer::new(world);
    start.reset(0);
    let key = |e: &Platformer, t: usize| (e.position().0, e.position().1, t);
    let mut seen: HashMap<Key, Vec<Action>> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(key(&start, 0), vec![]);
    queue.push_back((start, 0usize, vec![]));
    while let Some((env, _, path)) = queue.pop_front() {
        for a in [Action::WalkRight, Action::JumpRight] {
            let mut next = env.clone();
            let r = next.step(a).unwrap();
            let mut p: Vec<Action> = path.clone();
            p.push(a);
            if r.info.reached_flag {
                return Some(p);
            }
            if r.done {
                continue;
            }
            // Airborne states differ in their remaining arc, so the tick
            // count modulo the arc length is part of the key.
            let k = key(&next, r.info.ticks % 4);
            if !seen.contains_key(&k) {
                seen.insert(k, p.clone());
                queue.push_back((next, r.info.ticks, p));
            }
        }
    }
    None
}

#[test]
fn default_world_flag_is_reachable_by_a_script() {
    let script = plan_to_flag(WorldSpec::default_world()).expect("flag reachable");
    let mut env = Platformer::new(WorldSpec::default_world());
    env.reset(0);
    let mut total = 0.0;
    let mut last = None;
    for a in &script {
        let r = env.step(*a).unwrap();
        total += r.reward;
        last = Some(r);
    }
    let last = last.unwrap();
    assert!(last.done && last.info.reached_flag && !last.info.died);
    let world = WorldSpec::default_world();
    let dx = (last.info.x - world.start_x()) as f64;
    let expect = dx - 0.1 * script.len() as f64 + 50.0;
    assert!((total - expect).abs() < 1e-9, "{total} vs {expect}");
}

#[test]
fn walking_only_dies_at_the_first_gap() {
    let mut env = Platformer::new(WorldSpec::default_world());
    env.reset(0);
    let gap = (0..).find(|&x| WorldSpec::default_world().surface(x) == 0).unwrap();
    loop {
        let r = env.step(Action::WalkRight).unwrap();
        if r.done {
            assert!(r.info.died);
            assert_eq!(r.info.x, gap);
            assert!((r.reward - (1.0 - 0.1 - 25.0)).abs() < 1e-12);
            break;
        }
    }
}

#[test]
fn blocked_world_truncates() {
    // A block in front of the start stops walking forever.
    let mut world: WorldSpec = "...F\n.MB.\n####\n".parse().unwrap();
    world.max_steps = 7;
    let mut env = Platformer::new(world);
    env.reset(0);
    let mut steps = 0;
    loop {
        steps += 1;
        let r = env.step(Action::WalkRight).unwrap();
        assert_eq!(r.reward, -0.1);
        if r.done {
            assert!(r.info.truncated);
            break;
        }
    }
    assert_eq!(steps, 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_actions_same_trajectory(actions in prop::collection::vec(any::<bool>(), 1..60), seed in any::<u64>()) {
        let run = || {
            let mut env = Platformer::new(WorldSpec::default_world());
            let mut out = vec![env.reset(seed).flatten()];
            for &j in &actions {
                let r = env.step(if j { Action::JumpRight } else { Action::WalkRight }).unwrap();
                out.push(r.observation.flatten());
                out.push(vec![r.reward]);
                if r.done {
                    break;
                }
            }
            out
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn rewards_are_progress_minus_tick(actions in prop::collection::vec(any::<bool>(), 1..80)) {
        let mut env = Platformer::new(WorldSpec::default_world());
        env.reset(0);
        for &j in &actions {
            let x0 = env.position().0;
            let r = env.step(if j { Action::JumpRight } else { Action::WalkRight }).unwrap();
            let mut expect = (r.info.x - x0) as f64 - 0.1;
            if r.info.reached_flag { expect += 50.0; }
            if r.info.died { expect -= 25.0; }
            prop_assert!((r.reward - expect).abs() < 1e-12);
            prop_assert!(r.info.x >= x0);
            if r.done { break; }
        }
    }

    #[test]
    fn world_text_round_trips(cols in prop::collection::vec(0usize..4, 4..30)) {
        let h = 5;
        let mut rows = vec![String::new(); h];
        for (x, &s) in cols.iter().enumerate() {
            let s = if x == 0 { s.max(1) } else { s };
            for (r, row) in rows.iter_mut().enumerate() {
                let from_bottom = h - 1 - r;
                row.push(if from_bottom < s { '#' } else if x == 0 && from_bottom == s { 'M' } else if x + 1 == cols.len() && from_bottom == s { 'F' } else { '.' });
            }
        }
        let text = rows.join("\n") + "\n";
        if let Ok(w) = text.parse::<WorldSpec>() {
            let again: WorldSpec = w.to_text().parse().unwrap();
            prop_assert_eq!(w, again);
        }
    }
}
