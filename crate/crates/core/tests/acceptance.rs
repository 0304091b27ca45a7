//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bott::iso::{extract_sigma_eps, search_isos, search_isos_exhaustive, GradedIso};
use bott::moves::{switch, twist, MoveKind};
use bott::ring::{reduce, BottMatrix, Class2, Polynomial};
use bott::stabilize::{stabilize_traced, RaiseTrace, StepCase};
use bott::structure::{
    decompose_tower, same_block, same_block_in, square_zero_bruteforce, square_zero_generators,
};
use bott::verify_certificate;
use num_bigint::BigInt;
use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{what} took {took:.1?}, limit {limit:?}"));
    }
    Ok(())
}

fn hirzebruch(a: i64) -> BottMatrix {
    common::matrix(&[&[], &[a]])
}

/// Every multiple of a closed-form square-zero generator inside the box.
fn closed_form_family(a: &BottMatrix, bound: i64) -> BTreeSet<Class2> {
    let mut out = BTreeSet::new();
    for g in square_zero_generators(a) {
        let p = &g.primitive;
        let top = p
            .coeffs()
            .iter()
            .map(|c| c.magnitude().clone())
            .max()
            .unwrap();
        let top = i64::try_from(top).unwrap();
        for lambda in 1..=bound / top {
            for s in [lambda, -lambda] {
                out.insert(p.scale(&BigInt::from(s)));
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut total = 0;
    for t in 0..200 {
        let n = 1 + t % 4;
        let a = common::random_matrix(&mut rng, n, 3);
        let brute: BTreeSet<Class2> = square_zero_bruteforce(&a, 6).into_iter().collect();
        let closed = closed_form_family(&a, 6);
        if brute != closed {
            return Err(format!(
                "A = {a}: brute force has {} classes, closed form {}",
                brute.len(),
                closed.len()
            ));
        }
        total += brute.len();
    }
    within(start, Duration::from_secs(60), "square-zero classification")?;
    Ok(format!(
        "200 matrices, {total} classes, {:.1?}",
        start.elapsed()
    ))
}

fn criterion_2(found: &mut Vec<GradedIso>) -> Outcome {
    let start = Instant::now();
    for a in -4..=4 {
        for b in -4..=4 {
            let isos = search_isos(&hirzebruch(a), &hirzebruch(b), 6);
            let same_parity = (a - b).rem_euclid(2) == 0;
            if isos.is_empty() == same_parity {
                return Err(format!("F_{a} vs F_{b}: {} isomorphisms", isos.len()));
            }
            found.extend(isos);
        }
    }
    within(start, Duration::from_secs(60), "Hirzebruch searches")?;
    Ok(format!(
        "81 pairs, {} isomorphisms, {:.1?}",
        found.len(),
        start.elapsed()
    ))
}

fn criterion_3(found: &mut Vec<GradedIso>) -> Outcome {
    let mut detail = Vec::new();
    for n in 1..=4usize {
        let z = BottMatrix::zero(n);
        let isos = search_isos(&z, &z, 1);
        let expected = (1u64 << n) * (1..=n as u64).product::<u64>();
        if isos.len() as u64 != expected {
            return Err(format!(
                "n = {n}: {} automorphisms at bound 1, expected {expected}",
                isos.len()
            ));
        }
        if n <= 3 {
            let wide = search_isos(&z, &z, 2);
            let oracle = search_isos_exhaustive(&z, &z, 2);
            if wide != isos || oracle != isos {
                return Err(format!(
                    "n = {n}: bound 2 gives {} (pruned) and {} (exhaustive), expected {expected}",
                    wide.len(),
                    oracle.len()
                ));
            }
        }
        detail.push(expected.to_string());
        found.extend(isos);
    }
    Ok(format!("counts {}", detail.join(", ")))
}

/// `phi(x_i) (phi(x_i) - phi(alpha_i))` reduced in the target, through the
/// polynomial rewriting path rather than the closed-form product.
fn relation_oracle(phi: &GradedIso) -> bool {
    let ctx = Arc::new(phi.target().clone());
    (1..=phi.n()).all(|i| {
        let img = Polynomial::linear(&phi.image(i));
        let alpha = Polynomial::linear(&-&phi.apply2(&phi.source().alpha(i)));
        reduce(&img.mul(&img.add(&alpha)), &ctx).is_zero()
    })
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut switches, mut twists) = (0, 0);
    while switches + twists < 500 {
        let n = rng.gen_range(2..=6);
        let b = if rng.gen_bool(0.5) {
            common::random_matrix(&mut rng, n, 2)
        } else {
            let rows: Vec<Vec<i64>> = (1..=n)
                .map(|i| {
                    (1..i)
                        .map(|_| {
                            if rng.gen_bool(0.3) {
                                rng.gen_range(-2..=2)
                            } else {
                                0
                            }
                        })
                        .collect()
                })
                .collect();
            BottMatrix::from_rows(&rows).unwrap()
        };
        let Some(kind) = common::random_move(&mut rng, &b) else {
            continue;
        };
        let mv = bott::Move::perform(&b, &kind).map_err(|e| format!("{kind} on {b}: {e}"))?;
        let c = mv.induced.matrix().clone();
        GradedIso::new(b.clone(), mv.after.clone(), c)
            .map_err(|e| format!("{kind} on {b}: {e}"))?;
        if !relation_oracle(&mv.induced) {
            return Err(format!("{kind} on {b}: reduced relation is nonzero"));
        }
        let back = match &kind {
            MoveKind::Switch { j } => {
                switches += 1;
                switch(&mv.after, *j)
            }
            MoveKind::Twist { j, v } => {
                twists += 1;
                twist(&mv.after, *j, &-v)
            }
        }
        .map_err(|e| format!("inverse of {kind} on {b}: {e}"))?;
        if back.after != b {
            return Err(format!("inverse of {kind} on {b} lands on {}", back.after));
        }
        let round = GradedIso::compose(&back.induced, &mv.induced).map_err(|e| e.to_string())?;
        if round != GradedIso::identity(&b) {
            return Err(format!("{kind} on {b}: induced maps do not cancel"));
        }
    }
    Ok(format!("{switches} switches, {twists} twists"))
}

fn random_pairs(count: usize) -> Vec<(BottMatrix, BottMatrix, Vec<GradedIso>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.gen_range(2..=4);
        let a = common::random_matrix(&mut rng, n, 2);
        let b = common::random_moves(&mut rng, &a, 2 * n).end;
        let isos = search_isos(&a, &b, 6);
        if !isos.is_empty() {
            out.push((a, b, isos));
        }
    }
    out
}

fn check_sigma_blocks(phi: &GradedIso) -> Result<(), String> {
    let (a, b) = (phi.source(), phi.target());
    let ta = decompose_tower(a).map_err(|e| e.to_string())?;
    let tb = decompose_tower(b).map_err(|e| e.to_string())?;
    let se = extract_sigma_eps(phi, &ta, &tb).map_err(|e| format!("C = {}: {e}", phi.matrix()))?;
    let n = phi.n();
    for i in 1..=n {
        if ta.index_level(i) != tb.index_level(se.sigma(i)) {
            return Err(format!(
                "C = {}: sigma moves x_{i} off its level",
                phi.matrix()
            ));
        }
    }
    for i in 1..=n {
        for j in i + 1..=n {
            if ta.index_level(i) != ta.index_level(j) {
                continue;
            }
            let in_a = same_block_in(a, &ta, i, j);
            let in_b = same_block_in(b, &tb, se.sigma(i), se.sigma(j));
            if in_a != in_b {
                return Err(format!(
                    "C = {}: blocks of {i},{j} do not correspond",
                    phi.matrix()
                ));
            }
        }
    }
    Ok(())
}

fn criterion_5(found: &[GradedIso], pairs: &[(BottMatrix, BottMatrix, Vec<GradedIso>)]) -> Outcome {
    let mut checked = 0;
    for phi in found.iter().chain(pairs.iter().flat_map(|p| p.2.iter())) {
        check_sigma_blocks(phi)?;
        checked += 1;
    }
    Ok(format!(
        "{checked} isomorphisms, {} random pairs",
        pairs.len()
    ))
}

/// Independent recomputation of the facts a run relied on. Returns the
/// number of disagreements.
fn hypothesis_chain_mismatches(traces: &[RaiseTrace]) -> usize {
    let mut bad = 0;
    for tr in traces {
        for step in tr.target_steps.iter().chain(&tr.source_steps) {
            let b = &step.moves.start;
            let p = b.entry(step.ell, step.ell - 1);
            let case = if p == &BigInt::from(0) {
                StepCase::Zero
            } else if p.is_even() {
                StepCase::Even
            } else {
                StepCase::Odd
            };
            if p != &step.p || case != step.case {
                bad += 1;
            }
            if case == StepCase::Odd && step.ell <= step.k + 2 {
                bad += 1;
            }
        }
        if let Some(ob) = &tr.odd_boundary {
            let k = tr.k;
            if ob.target.entry(k + 2, k + 1).is_even() || !same_block(&ob.target, k + 1, k + 2) {
                bad += 1;
            }
            if let Some(a) = &ob.source_at_k3 {
                if a.entry(k + 3, k + 2).is_odd() || !same_block(a, k + 1, k + 3) {
                    bad += 1;
                }
            }
        }
    }
    bad
}

#[derive(Default)]
struct RunTally {
    runs: usize,
    tripwires: usize,
    odd_boundaries: usize,
    source_detours: usize,
    first_failure: Option<String>,
}

impl RunTally {
    fn run(&mut self, phi: &GradedIso) {
        self.runs += 1;
        let n = phi.n();
        let fail = |tally: &mut RunTally, msg: String| {
            tally.tripwires += 1;
            tally.first_failure.get_or_insert(msg);
        };
        match stabilize_traced(phi) {
            Err(e) => fail(
                self,
                format!(
                    "C = {} on {} -> {}: {e}",
                    phi.matrix(),
                    phi.source(),
                    phi.target()
                ),
            ),
            Ok((cert, traces)) => {
                if let Err(e) = verify_certificate(&cert.to_doc()) {
                    fail(
                        self,
                        format!("C = {}: certificate rejected: {e}", phi.matrix()),
                    );
                }
                if cert.k_final + 2 < n {
                    fail(
                        self,
                        format!("C = {}: k_final {}", phi.matrix(), cert.k_final),
                    );
                }
                let steps: usize = traces
                    .iter()
                    .map(|t| t.target_steps.len() + t.source_steps.len())
                    .sum();
                if steps > n * (n + 2) || traces.len() > n {
                    fail(
                        self,
                        format!(
                            "C = {}: {steps} key steps in {} raises",
                            phi.matrix(),
                            traces.len()
                        ),
                    );
                }
                let mismatches = hypothesis_chain_mismatches(&traces);
                if mismatches > 0 {
                    fail(
                        self,
                        format!(
                            "C = {}: {mismatches} recomputed facts disagree",
                            phi.matrix()
                        ),
                    );
                }
                self.odd_boundaries += traces.iter().filter(|t| t.odd_boundary.is_some()).count();
                self.source_detours += traces.iter().filter(|t| !t.source_steps.is_empty()).count();
            }
        }
    }
}

fn synthetic_cases() -> Vec<GradedIso> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = BottMatrix::h_matrix;
    let seeds: Vec<BottMatrix> = vec![
        h(3),
        h(4),
        h(5),
        BottMatrix::block_diagonal(&[h(2), h(2)]),
        BottMatrix::block_diagonal(&[h(1), h(3)]),
        BottMatrix::block_diagonal(&[h(2), h(3)]),
        BottMatrix::block_diagonal(&[h(1), h(4)]),
    ];
    let autos: Vec<Vec<GradedIso>> = seeds.iter().map(|a| search_isos(a, a, 2)).collect();
    let mut out = Vec::new();
    while out.len() < 200 {
        let base = if out.len() % 2 == 0 {
            autos
                .choose(&mut rng)
                .unwrap()
                .choose(&mut rng)
                .unwrap()
                .clone()
        } else {
            let n = rng.gen_range(3..=5);
            let rows: Vec<Vec<i64>> = (1..=n)
                .map(|i| {
                    (1..i)
                        .map(|_| {
                            if rng.gen_bool(0.3) {
                                rng.gen_range(-2..=2)
                            } else {
                                0
                            }
                        })
                        .collect()
                })
                .collect();
            GradedIso::identity(&BottMatrix::from_rows(&rows).unwrap())
        };
        let n = base.n();
        let (lg, lf) = (rng.gen_range(0..=3 * n), rng.gen_range(0..=3 * n));
        let g = common::random_moves(&mut rng, base.target(), lg);
        let f = common::random_moves(&mut rng, base.source(), lf)
            .inverse()
            .unwrap();
        let phi = GradedIso::compose(
            &g.composite,
            &GradedIso::compose(&base, &f.composite).unwrap(),
        )
        .unwrap();
        if phi.max_stable() + 2 < n {
            out.push(phi);
        }
    }
    out
}

fn criterion_6(
    synthetic: &mut RunTally,
    organic: &mut RunTally,
    organic_isos: &[GradedIso],
) -> Outcome {
    let start = Instant::now();
    for phi in synthetic_cases() {
        synthetic.run(&phi);
    }
    within(start, Duration::from_secs(300), "synthetic stabilization")?;
    let synthetic_time = start.elapsed();
    for phi in organic_isos {
        organic.run(phi);
    }
    for tally in [&*synthetic, &*organic] {
        if let Some(msg) = &tally.first_failure {
            return Err(msg.clone());
        }
    }
    Ok(format!(
        "synthetic {} runs in {synthetic_time:.1?} ({} odd boundaries, {} source detours); organic {} runs",
        synthetic.runs, synthetic.odd_boundaries, synthetic.source_detours, organic.runs
    ))
}

fn criterion_7(synthetic: &RunTally, organic: &RunTally) -> Outcome {
    let fired = synthetic.tripwires + organic.tripwires;
    if fired > 0 {
        return Err(format!("{fired} tripwire firings"));
    }
    Ok(format!(
        "0 firings over {} runs",
        synthetic.runs + organic.runs
    ))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn bott_output(args: &[&str]) -> Result<(Option<i32>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bott"))
        .args(args)
        .env_remove("BOTT_SEARCH_BOUND")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code(), out.stdout))
}

fn criterion_8() -> Outcome {
    let dir = std::env::temp_dir().join(format!("bott-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cert = dir.join("cert.json");
    let p = |name: &str| fixture(name).to_string_lossy().into_owned();
    let cert_s = cert.to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["ring".into(), p("h3.json")],
        vec!["sqzero".into(), p("h3.json")],
        vec!["decompose".into(), p("two_stage.json")],
        vec![
            "iso-check".into(),
            p("f0.json"),
            p("f2.json"),
            p("f0_to_f2.json"),
        ],
        vec![
            "iso-search".into(),
            p("f0.json"),
            p("f2.json"),
            "--bound".into(),
            "3".into(),
        ],
        vec![
            "iso-search".into(),
            p("h3.json"),
            p("h3.json"),
            "--bound".into(),
            "2".into(),
            "--jobs".into(),
            "4".into(),
        ],
        vec![
            "stabilize".into(),
            p("h3.json"),
            p("h3.json"),
            p("h3_auto.json"),
            "--out".into(),
            cert_s.clone(),
        ],
        vec!["verify-cert".into(), cert_s],
        vec!["decompose".into(), p("malformed.json")],
    ];
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = bott_output(&args)?;
        for _ in 0..3 {
            if bott_output(&args)? != first {
                return Err(format!("bott {} is not byte-stable", args[0]));
            }
        }
    }
    let _ = fs::remove_dir_all(&dir);
    Ok(format!("{} invocations, 4 runs each", runs.len()))
}

fn main() -> ExitCode {
    let mut found = Vec::new();
    let pairs = random_pairs(50);
    let mut lines: Vec<(usize, &str, Outcome)> = vec![
        (1, "square-zero classification", criterion_1()),
        (2, "Hirzebruch dichotomy", criterion_2(&mut found)),
        (
            3,
            "automorphisms of the trivial tower",
            criterion_3(&mut found),
        ),
        (4, "move soundness", criterion_4()),
    ];
    lines.push((5, "sigma, levels and blocks", criterion_5(&found, &pairs)));
    let organic: Vec<GradedIso> = found
        .iter()
        .cloned()
        .chain(pairs.iter().flat_map(|p| p.2.clone()))
        .collect();
    let (mut synthetic_tally, mut organic_tally) = (RunTally::default(), RunTally::default());
    lines.push((
        6,
        "stabilization",
        criterion_6(&mut synthetic_tally, &mut organic_tally, &organic),
    ));
    lines.push((
        7,
        "proof-path conformance",
        criterion_7(&synthetic_tally, &organic_tally),
    ));
    lines.push((8, "CLI determinism", criterion_8()));

    let mut failed = 0;
    for (idx, name, outcome) in &lines {
        match outcome {
            Ok(detail) => println!("PASS criterion {idx}: {name} ({detail})"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {idx}: {name}: {why}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
