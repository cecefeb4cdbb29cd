//! End-to-end acceptance checks. Each test prints one pass/fail line; run
//! with `--nocapture` to see them. The sweeps behind criteria 1-5 are built
//! once and shared.

use std::sync::OnceLock;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use stallings::core_graph::{CoreGraph, LabeledGraph};
use stallings::hyperbolic::{
    check_log_bound, cylinder_radius, displacement, distance, estimate_gp, sample_schottky,
    Isometry, PointH3,
};
use stallings::search::{
    enumerate_subgroups, run_search, sample_subgroup, test_pair, PairVerdict, SearchConfig,
    SearchMode,
};
use stallings::subgroup_calc::{index, intersect, join, pushout_t, SubgroupIndex};
use stallings::words::Word;
use num_complex::Complex64;

fn report(criterion: usize, name: &str, pass: bool) {
    println!(
        "criterion {criterion} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed");
}

struct PairData {
    v: PairVerdict,
    chi_join: usize,
    chi_t: usize,
    inter_rank: usize,
    inter_branch_simple: usize,
    inter_branch_weighted: usize,
    inter_no_valence1: bool,
    join_rank: usize,
    join_branch_weighted: usize,
    join_no_valence1: bool,
}

/// Cores of conjugate-style subgroups keep a valence-1 basepoint stem; the
/// branch-count identity only applies without such vertices.
fn no_valence1(g: &CoreGraph) -> bool {
    (0..g.vertex_count()).all(|v| g.valence(v) >= 2)
}

fn pair_data(h: &CoreGraph, k: &CoreGraph, m: usize) -> PairData {
    let v = test_pair(h, k, m).unwrap();
    let inter = intersect(h, k).unwrap();
    let joined = join(h, k).unwrap();
    let t = pushout_t(h, k).unwrap();
    let ib = inter.branch_vertices();
    let jb = joined.branch_vertices();
    PairData {
        chi_join: joined.rank().saturating_sub(1),
        chi_t: t.reduced_euler().chi_bar,
        inter_rank: inter.rank(),
        inter_branch_simple: ib.simple_count,
        inter_branch_weighted: ib.weighted_count,
        inter_no_valence1: no_valence1(&inter),
        join_rank: joined.rank(),
        join_branch_weighted: jb.weighted_count,
        join_no_valence1: no_valence1(&joined),
        v,
    }
}

struct Sweeps {
    /// All canonical rank-2 subgroups of F_2 on two generators of length <= 3.
    subs2: Vec<CoreGraph>,
    exhaustive2: Vec<PairData>,
    random2: Vec<PairData>,
    random3: Vec<PairData>,
}

const RANDOM2_SEED: u64 = 1_0001;
const RANDOM3_SEED: u64 = 3_0003;
const RANDOM_PAIRS: usize = 10_000;

fn random_pairs(m: usize, max_len: usize, seed: u64, count: usize) -> Vec<(CoreGraph, CoreGraph)> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let h = sample_subgroup(m, 2, max_len, &mut rng).unwrap();
            let k = sample_subgroup(m, 2, max_len, &mut rng).unwrap();
            (h, k)
        })
        .collect()
}

fn sweeps() -> &'static Sweeps {
    static SWEEPS: OnceLock<Sweeps> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let subs2 = enumerate_subgroups(2, 2, 3).unwrap();
        let mut exhaustive2 = Vec::new();
        for i in 0..subs2.len() {
            for j in i..subs2.len() {
                exhaustive2.push(pair_data(&subs2[i], &subs2[j], 2));
            }
        }
        let random2 = random_pairs(2, 6, RANDOM2_SEED, RANDOM_PAIRS)
            .iter()
            .map(|(h, k)| pair_data(h, k, 2))
            .collect();
        let random3 = random_pairs(3, 6, RANDOM3_SEED, RANDOM_PAIRS)
            .iter()
            .map(|(h, k)| pair_data(h, k, 3))
            .collect();
        Sweeps { subs2, exhaustive2, random2, random3 }
    })
}

#[test]
fn criterion_1_rank2_join_sweep() {
    let s = sweeps();
    let all = s.exhaustive2.iter().chain(&s.random2);
    let qualifying = all.clone().filter(|p| p.v.qualifies).count();
    let violations = all.clone().filter(|p| !p.v.conjecture_ok).count();
    assert!(qualifying > 0, "sweep produced no qualifying pairs");
    report(
        1,
        "rank-2 pairs with rank-2 intersection have rank-2 join",
        violations == 0,
    );
}

#[test]
fn criterion_2_rank3_join_sweep() {
    let s = sweeps();
    let qualifying = s.random3.iter().filter(|p| p.v.qualifies).count();
    let violations = s.random3.iter().filter(|p| !p.v.conjecture_ok).count();
    assert!(qualifying > 0, "sweep produced no qualifying pairs");
    report(
        2,
        "rank-3 pairs with rank >= 3 intersection have rank <= 3 join",
        violations == 0,
    );
}

#[test]
fn criterion_3_branch_matrix_bound_soundness() {
    // the block bound applies when all three cores are genuinely trivalent:
    // every branch vertex has valence 3 and each graph has at least one
    // branch vertex (so intersection rank >= 2)
    let s = sweeps();
    let mut applicable = 0;
    let mut violations = 0;
    for p in s.exhaustive2.iter().chain(&s.random2).chain(&s.random3) {
        let b = p.v.bounds.as_ref().unwrap();
        if b.trivalent && b.intersection_trivalent && p.inter_rank >= 2 {
            applicable += 1;
            if p.v.rank_join > b.integral_bound {
                violations += 1;
            }
        }
    }
    assert!(applicable > 0, "no all-trivalent triples sampled");
    report(
        3,
        "join rank bounded by block decomposition on trivalent triples",
        violations == 0,
    );
}

#[test]
fn criterion_4_join_euler_bounded_by_pushout() {
    let s = sweeps();
    let violations = s
        .exhaustive2
        .iter()
        .chain(&s.random2)
        .chain(&s.random3)
        .filter(|p| p.chi_join > p.chi_t)
        .count();
    report(
        4,
        "reduced Euler characteristic of the join is at most the pushout's",
        violations == 0,
    );
}

#[test]
fn criterion_5_structural_identities() {
    let s = sweeps();
    let mut failures = 0;

    // ones-count equals the intersection's branch count on trivalent triples
    for p in s.exhaustive2.iter().chain(&s.random2).chain(&s.random3) {
        let b = p.v.bounds.as_ref().unwrap();
        if b.trivalent && b.intersection_trivalent && b.ones != p.inter_branch_simple {
            failures += 1;
        }
    }

    // weighted branch count = 2(rank - 1) on every core of rank >= 1 with no
    // valence-1 vertices
    for p in s.exhaustive2.iter().chain(&s.random2).chain(&s.random3) {
        if p.inter_rank >= 1
            && p.inter_no_valence1
            && p.inter_branch_weighted != 2 * (p.inter_rank - 1)
        {
            failures += 1;
        }
        if p.join_no_valence1 && p.join_branch_weighted != 2 * (p.join_rank - 1) {
            failures += 1;
        }
    }
    for g in &s.subs2 {
        if no_valence1(g) && g.branch_vertices().weighted_count != 2 * (g.rank() - 1) {
            failures += 1;
        }
    }

    // Nielsen-Schreier: rank - 1 = index * (n - 1) on finite-index cores
    let mut finite_seen = 0;
    for g in &s.subs2 {
        if let SubgroupIndex::Finite(idx) = index(g) {
            finite_seen += 1;
            if g.rank() - 1 != idx * (g.alphabet_rank() - 1) {
                failures += 1;
            }
        }
    }
    assert!(finite_seen > 0, "no finite-index subgroups enumerated");
    report(5, "branch-count and index identities", failures == 0);
}

fn random_connected_graph(rng: &mut impl Rng) -> LabeledGraph {
    let n = 2;
    let word_count = rng.gen_range(1..4);
    let words: Vec<Word> = (0..word_count)
        .map(|_| loop {
            let len = rng.gen_range(1..8);
            let text: String = (0..len)
                .map(|_| *[b'a', b'b', b'A', b'B'].choose(rng).unwrap() as char)
                .collect();
            let w = Word::parse(&text, n).unwrap();
            if !w.is_empty() {
                break w;
            }
        })
        .collect();
    let mut g = LabeledGraph::wedge_of_words(&words, n).unwrap();
    // extra random edges between existing vertices keep it connected while
    // forcing plenty of fold collisions
    for _ in 0..rng.gen_range(0..6) {
        let src = rng.gen_range(0..g.vertex_count());
        let dst = rng.gen_range(0..g.vertex_count());
        g.add_edge(src, dst, rng.gen_range(0..n));
    }
    g
}

#[test]
fn criterion_6_fold_confluence() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut mismatches = 0;
    for _ in 0..100 {
        let g = random_connected_graph(&mut rng);
        let reference = CoreGraph::from_graph(&g);
        for _ in 0..10 {
            let mut edges: Vec<_> = g.edges().to_vec();
            edges.shuffle(&mut rng);
            let mut shuffled = LabeledGraph::new(g.alphabet_rank());
            for _ in 1..g.vertex_count() {
                shuffled.add_vertex();
            }
            for e in edges {
                shuffled.add_edge(e.src, e.dst, e.label);
            }
            if CoreGraph::from_graph(&shuffled) != reference {
                mismatches += 1;
            }
        }
    }
    report(
        6,
        "folding is confluent across 100 graphs x 10 edge orders",
        mismatches == 0,
    );
}

/// Adaptive Simpson quadrature to absolute tolerance `eps`.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        eps: f64,
        whole: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, eps / 2.0, left, depth - 1)
                + recurse(f, m, b, eps / 2.0, right, depth - 1)
        }
    }
    recurse(f, a, b, eps, simpson(f, a, b), 50)
}

/// Independent geodesic arc-length evaluation: numeric quadrature of the
/// hyperbolic line element along the vertical line or semicircle through the
/// two points, never touching the closed-form distance.
fn geodesic_length_quadrature(p: &PointH3, q: &PointH3) -> f64 {
    let du = ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt();
    if du < 1e-8 {
        let (a, b) = (p.z.min(q.z), p.z.max(q.z));
        if b - a < 1e-15 {
            return 0.0;
        }
        return adaptive_simpson(&|z: f64| 1.0 / z, a, b, 1e-13);
    }
    // semicircle with center c on the boundary line through the projections
    let c = (du * du + q.z * q.z - p.z * p.z) / (2.0 * du);
    let t_p = f64::atan2(p.z, -c);
    let t_q = f64::atan2(q.z, du - c);
    let (a, b) = (t_p.min(t_q), t_p.max(t_q));
    // arc length element R dθ / z with z = R sin θ
    adaptive_simpson(&|t: f64| 1.0 / t.sin(), a, b, 1e-13)
}

fn random_point(rng: &mut impl Rng) -> PointH3 {
    PointH3::new(
        rng.gen_range(-3.0..3.0),
        rng.gen_range(-3.0..3.0),
        (rng.gen_range(0.05f64..3.0)).exp() - 0.95,
    )
    .unwrap()
}

fn random_conjugator(rng: &mut impl Rng) -> Isometry {
    loop {
        let e = |rng: &mut dyn RngCore| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if let Ok(h) = Isometry::normalized(e(rng), e(rng), e(rng), e(rng)) {
            return h;
        }
    }
}

#[test]
fn criterion_7_displacement_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut max_err: f64 = 0.0;
    let mut pass = true;
    for _ in 0..10_000 {
        let ell = rng.gen_range(0.05..4.0);
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let h = random_conjugator(&mut rng);
        let g = h.compose(&Isometry::axial(ell, theta)).compose(&h.inverse());
        let p = random_point(&mut rng);
        let q = g.apply(&p);
        let closed = distance(&p, &q);
        let quadrature = geodesic_length_quadrature(&p, &q);
        max_err = max_err.max((closed - quadrature).abs());
        if (closed - quadrature).abs() > 1e-9 {
            pass = false;
        }
        // displacement dominates the translation length
        if closed < ell - 1e-9 {
            pass = false;
        }
        // equality on the axis
        let axis = g.axis_point().unwrap();
        if (displacement(&axis, &g) - ell).abs() > 1e-9 {
            pass = false;
        }
        // strict excess at a known positive axis distance, and agreement with
        // the displacement-at-distance-r identity
        let r: f64 = rng.gen_range(0.1..2.0);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let base = PointH3::new(r.sinh() * phi.cos(), r.sinh() * phi.sin(), 1.0).unwrap();
        let off_axis = h.apply(&base);
        let d = displacement(&off_axis, &g);
        if d <= ell + 1e-7 {
            pass = false;
        }
        let predicted =
            (ell.cosh() * r.cosh().powi(2) - theta.cos() * r.sinh().powi(2)).acosh();
        if (d - predicted).abs() > 1e-9 {
            pass = false;
        }
        if (cylinder_radius(ell, theta, d).unwrap() - r).abs() > 1e-9 {
            pass = false;
        }
    }
    println!("criterion 7 max |closed form - quadrature| = {max_err:.3e}");
    report(
        7,
        "closed-form distance matches quadrature; displacement >= length",
        pass,
    );
}

fn schottky_sample_point(rng: &mut impl Rng, k: usize) -> PointH3 {
    PointH3::new(
        rng.gen_range(-10.0..(8.0 * k as f64 + 10.0)),
        rng.gen_range(-10.0..10.0),
        rng.gen_range(0.05f64.ln()..100.0f64.ln()).exp(),
    )
    .unwrap()
}

#[test]
fn criterion_8_log_2k_minus_1_margin() {
    let mut min_margin = f64::INFINITY;
    for k in [2usize, 3] {
        for seed in 0..20u64 {
            let cfg = sample_schottky(k, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(808 + seed * 97 + k as u64);
            for _ in 0..1000 {
                let p = schottky_sample_point(&mut rng, k);
                min_margin = min_margin.min(check_log_bound(&p, &cfg));
            }
        }
    }
    println!("criterion 8 min margin = {min_margin:.6}");
    report(
        8,
        "max generator displacement is at least log(2k-1) everywhere sampled",
        min_margin >= -1e-9,
    );
}

#[test]
fn criterion_9_gp_rank_cap() {
    let mut violations = 0;
    for k in [2usize, 3] {
        let lambda = ((2 * k - 1) as f64).ln();
        for seed in 0..20u64 {
            let cfg = sample_schottky(k, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(909 + seed * 97 + k as u64);
            for _ in 0..5 {
                let p = schottky_sample_point(&mut rng, k);
                let est = estimate_gp(&p, &cfg, lambda, 8);
                if est.rank_estimate > k - 1 {
                    violations += 1;
                }
            }
        }
    }

    // rank-5 configs at the log 9 threshold: hard cap at 4, plus a survey of
    // how often the estimate is already <= 2 (no threshold asserted; sampling
    // cannot certify an infimum)
    let lambda = 9.0f64.ln();
    let mut checked = 0;
    let mut low_rank = 0;
    for seed in 0..5u64 {
        let cfg = sample_schottky(5, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(955 + seed * 97);
        for _ in 0..20 {
            let p = schottky_sample_point(&mut rng, 5);
            let est = estimate_gp(&p, &cfg, lambda, 5);
            if est.rank_estimate > 4 {
                violations += 1;
            }
            checked += 1;
            if est.rank_estimate <= 2 {
                low_rank += 1;
            }
        }
    }
    println!(
        "criterion 9 rank-5 survey: {low_rank}/{checked} sampled points have rank estimate <= 2"
    );
    report(
        9,
        "short-displacement subgroup rank estimates stay within the cap",
        violations == 0,
    );
}

#[test]
fn criterion_10_deterministic_reports() {
    let random_cfg = SearchConfig {
        m: 2,
        alphabet_rank: 2,
        mode: SearchMode::Random,
        max_word_length: 6,
        sample_count: 300,
        rng_seed: 11,
        parallelism: 0,
        witness_path: None,
    };
    let exhaustive_cfg = SearchConfig {
        mode: SearchMode::Exhaustive,
        max_word_length: 2,
        ..random_cfg.clone()
    };
    let mut pass = true;
    for cfg in [random_cfg, exhaustive_cfg] {
        let a = run_search(&cfg).unwrap().json_without_wall_time().unwrap();
        let b = run_search(&cfg).unwrap().json_without_wall_time().unwrap();
        if a != b {
            pass = false;
        }
    }
    // geometric sampling is deterministic per seed as well
    let a = serde_json::to_string(&sample_schottky(3, 17).unwrap().to_json()).unwrap();
    let b = serde_json::to_string(&sample_schottky(3, 17).unwrap().to_json()).unwrap();
    if a != b {
        pass = false;
    }
    report(10, "identical seeds produce byte-identical reports", pass);
}
