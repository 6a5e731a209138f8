//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultracoarse::blocks::{
    build_block, build_block_by_unions, embed_into_block, BlockSpec,
};
use ultracoarse::generate::{gen_random_dset, gen_random_metric, gen_random_ultrametric};
use ultracoarse::groups::{
    chain_metric, embed_into_group, universal_group_chain, BitVector, GroupKind, SubgroupChain,
};
use ultracoarse::metric::{
    distance_set, find_isometric_embedding, ultrametrize, validate_ultrametric,
    verify_isometric_embedding, DistanceSet, MetricSpace, SearchLimits, UltrametricSpace,
};
use ultracoarse::unions::{
    annulus_decomposition, check_coarse_disjoint_union, equivalence_union_spec, r_union,
    seq_union, union_point_map, PointedSpace, UnionSpec,
};
use ultracoarse::universal::{
    coarse_moduli, embed_into_cu, embed_into_cu_auto, embed_into_pu, embed_into_pu_auto,
    Target, Truncation, UniversalSpec,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_pointed(rng: &mut ChaCha8Rng, max_n: usize, max_d: u64) -> PointedSpace {
    let d = gen_random_dset(rng, max_d);
    let n = rng.gen_range(1..=max_n);
    let s = gen_random_ultrametric(rng.gen(), n, &d).unwrap();
    let b = rng.gen_range(0..n);
    PointedSpace::new(s, b).unwrap()
}

/// Distances of `a` and `b` agree under the label correspondence.
fn same_by_label(a: &UltrametricSpace, b: &UltrametricSpace) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| {
            let Some(bi) = b.index_of(a.label(i)) else {
                return false;
            };
            (0..a.len()).all(|j| b.index_of(a.label(j)).is_some_and(|bj| b.dist(bi, bj) == a.dist(i, j)))
        })
}

fn axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..1000u64 {
        let d = gen_random_dset(&mut rng, 8);
        let s = gen_random_ultrametric(seed, rng.gen_range(1..=12), &d).unwrap();
        let report = validate_ultrametric(&s);
        ensure(report.ok, || format!("seed {seed}: {}", report.summary()))?;
        ensure(distance_set(&s).is_subset(&d), || format!("seed {seed}: distances outside {d}"))?;
    }
    for round in 0..1000 {
        let k = rng.gen_range(2..=4);
        let parts: Vec<PointedSpace> = (0..k).map(|_| random_pointed(&mut rng, 6, 6)).collect();
        let radii: Vec<u64> = (1..k).map(|_| rng.gen_range(1..=10)).collect();
        let out = if k == 2 && round % 2 == 0 {
            r_union(&parts[0], &parts[1], radii[0]).unwrap()
        } else {
            seq_union(&UnionSpec::new(parts, radii).unwrap()).unwrap()
        };
        let report = validate_ultrametric(out.space());
        ensure(report.ok, || format!("union {round}: {}", report.summary()))?;
    }
    Ok("1000 generated spaces, 1000 unions valid".into())
}

fn all_dsets(max: u64, max_len: usize) -> Vec<DistanceSet> {
    (0u32..1 << max)
        .filter(|mask| (mask.count_ones() as usize) < max_len)
        .map(|mask| {
            let mut v = vec![0];
            v.extend((1..=max).filter(|i| mask >> (i - 1) & 1 == 1));
            DistanceSet::new(v).unwrap()
        })
        .collect()
}

fn fu_universality() -> Outcome {
    let mut instances = 0;
    let mut searched = 0;
    for m in 2..=4usize {
        for d in all_dsets(6, 4) {
            let spec = BlockSpec::uniform(d.clone(), m).unwrap();
            let block = build_block(&spec, 10_000).unwrap();
            for k in 0..25u64 {
                let n = if d.levels().is_empty() { 1 } else { 1 + (k as usize % m) };
                let seed = k + 1000 * m as u64 + 100_000 * d.values().iter().sum::<u64>();
                let x = gen_random_ultrametric(seed, n, &d).unwrap();
                let emb = embed_into_block(&x, &spec).map_err(|e| format!("FU({m},{d}) seed {seed}: {e}"))?;
                let map = emb.indices(&spec).unwrap();
                let report = verify_isometric_embedding(&map, &x, &block).unwrap();
                ensure(report.ok && emb.report.ok, || format!("FU({m},{d}) seed {seed}: not isometric"))?;
                if x.len() <= 5 {
                    let found = find_isometric_embedding(&x, &block, SearchLimits::default()).unwrap();
                    ensure(found.is_some(), || format!("FU({m},{d}) seed {seed}: oracle found no embedding"))?;
                    searched += 1;
                }
                instances += 1;
            }
        }
    }
    Ok(format!("{instances} embeddings isometric, {searched} confirmed by search"))
}

fn closed_form_vs_recursion() -> Outcome {
    let mut specs = 0;
    for d in all_dsets(6, 4) {
        let depth = d.levels().len();
        for code in 0..3usize.pow(depth as u32) {
            let widths: Vec<usize> = (0..depth).map(|i| code / 3usize.pow(i as u32) % 3 + 1).collect();
            let spec = BlockSpec::new(d.clone(), widths.clone()).unwrap();
            let closed = build_block(&spec, 10_000).unwrap();
            let recursive = build_block_by_unions(&spec, 10_000).unwrap();
            ensure(same_by_label(&closed, &recursive), || format!("{d} widths {widths:?} differ"))?;
            specs += 1;
        }
    }
    Ok(format!("{specs} block specs match exactly"))
}

fn decomposition_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for round in 0..200 {
        let x = random_pointed(&mut rng, 12, 8);
        let annuli = annulus_decomposition(&x, None).map_err(|e| format!("round {round}: {e}"))?;
        let back = seq_union(&annuli).unwrap();
        ensure(union_point_map(&annuli, back.space()).is_some(), || format!("round {round}: labels changed"))?;
        ensure(same_by_label(x.space(), back.space()), || format!("round {round}: annulus reassembly differs"))?;
        let split = equivalence_union_spec(x.space()).unwrap();
        let back = seq_union(&split).unwrap();
        ensure(same_by_label(x.space(), back.space()), || format!("round {round}: class reassembly differs"))?;
    }
    Ok("200 spaces reassembled exactly both ways".into())
}

fn cdu_checker() -> Outcome {
    let mut specs = Vec::new();
    for n in 1..=9 {
        for w in 1..=3 {
            specs.push(UniversalSpec::cu(n, w).unwrap());
        }
    }
    for n in 1..=16 {
        specs.push(UniversalSpec::pu(n).unwrap());
    }
    let mut checks = 0;
    for spec in &specs {
        let (space, partition) = spec.materialize(10_000).unwrap();
        let validity = validate_ultrametric(&space);
        ensure(validity.ok, || format!("{:?} {} blocks: {}", spec.kind(), spec.blocks().len(), validity.summary()))?;
        let top = spec.radii().iter().copied().max().unwrap_or(1);
        let scales: Vec<u64> = (1..=top).collect();
        let report = check_coarse_disjoint_union(&space, &partition, &scales).unwrap();
        ensure(report.pass, || format!("{:?} {} blocks fails", spec.kind(), spec.blocks().len()))?;
        for scale in &report.scales {
            // blocks 0..=last are exactly those touching a join at radius ≤ M
            let last = spec.radii().iter().rposition(|&r| r <= scale.scale).map(|j| j + 1);
            for b in &scale.boundary {
                let expected = last.is_some_and(|l| b.part <= l);
                ensure((b.size > 0) == expected, || {
                    format!("{:?} {} blocks, M={}: boundary of part {} misplaced", spec.kind(), spec.blocks().len(), scale.scale, b.part)
                })?;
            }
            checks += 1;
        }
    }
    Ok(format!("{} truncations, {checks} scale reports pass", specs.len()))
}

fn pipelines() -> Outcome {
    const CAP: u128 = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut cu_top, mut pu_top) = (0u128, 0u128);
    let mut materialized = 0;
    for round in 0..100 {
        let d = gen_random_dset(&mut rng, 3);
        let n = rng.gen_range(1..=12);
        let x = PointedSpace::from_space(gen_random_ultrametric(rng.gen(), n, &d).unwrap());

        let (cu, t) = embed_into_cu_auto(&x, Truncation { blocks: 1, width: 1 }, CAP)
            .map_err(|e| format!("round {round} CU: {e}"))?;
        let cu_spec = UniversalSpec::cu(t.blocks, t.width).unwrap();
        cu_top = cu_top.max(cu_spec.cardinality());
        let (pu, blocks) = embed_into_pu_auto(&x, 1, CAP).map_err(|e| format!("round {round} PU: {e}"))?;
        let pu_spec = UniversalSpec::pu(blocks).unwrap();
        pu_top = pu_top.max(pu_spec.cardinality());

        for (name, map) in [("CU", &cu), ("PU", &pu)] {
            ensure(map.injective, || format!("round {round} {name}: not injective"))?;
            ensure(map.parts.iter().all(|p| p.isometry.ok), || format!("round {round} {name}: annulus not isometric"))?;
            ensure(map.moduli.is_monotone(), || format!("round {round} {name}: moduli not monotone"))?;
            ensure(map.verified, || format!("round {round} {name}: not verified"))?;
        }

        // cross-annulus distances depend only on the two blocks
        for (name, map, spec) in [("CU", &cu, &cu_spec), ("PU", &pu, &pu_spec)] {
            let blocks: Vec<usize> = map
                .assignment
                .iter()
                .map(|t| match t {
                    Target::Block { block, .. } => *block,
                    Target::Element { .. } => unreachable!(),
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    if blocks[i] != blocks[j] {
                        let (lo, hi) = (blocks[i].min(blocks[j]), blocks[i].max(blocks[j]));
                        let p = (lo, ultracoarse::blocks::Address(vec![1; spec.blocks()[lo].depth()]));
                        let q = (hi, ultracoarse::blocks::Address(vec![1; spec.blocks()[hi].depth()]));
                        let want = spec.distance(&p, &q);
                        let got = target_distance(spec, &map.assignment[i], &map.assignment[j]);
                        ensure(got == want, || format!("round {round} {name}: cross distance not blockwise"))?;
                    }
                }
            }
        }

        // closed-form target distances agree with the materialized truncation
        for (map, spec) in [(&cu, &cu_spec), (&pu, &pu_spec)] {
            if spec.cardinality() <= 1500 {
                let (target, _) = spec.materialize(1500).unwrap();
                let idx: Vec<usize> = map
                    .assignment
                    .iter()
                    .map(|t| match t {
                        Target::Block { block, address } => spec.point_index(&(*block, address.clone())).unwrap(),
                        Target::Element { .. } => unreachable!(),
                    })
                    .collect();
                let moduli = coarse_moduli(&idx, x.space(), &target, None, None).unwrap();
                ensure(moduli.expansion == map.moduli.expansion, || format!("round {round}: materialized moduli differ"))?;
                materialized += 1;
            }
        }

        let cu2 = embed_into_cu(&x, Truncation { blocks: 2 * t.blocks, width: 2 * t.width }).unwrap();
        let pu2 = embed_into_pu(&x, 2 * blocks).unwrap();
        ensure(cu2.assignment == cu.assignment && cu2.moduli == cu.moduli, || format!("round {round}: CU unstable"))?;
        ensure(pu2.assignment == pu.assignment && pu2.moduli == pu.moduli, || format!("round {round}: PU unstable"))?;
    }
    Ok(format!(
        "100 spaces into CU and PU; largest truncations {cu_top} and {pu_top} points; {materialized} cross-checked by materialization"
    ))
}

fn target_distance(spec: &UniversalSpec, a: &Target, b: &Target) -> u64 {
    match (a, b) {
        (Target::Block { block: x, address: u }, Target::Block { block: y, address: v }) => {
            spec.distance(&(*x, u.clone()), &(*y, v.clone()))
        }
        _ => unreachable!(),
    }
}

fn random_vector(rng: &mut ChaCha8Rng, top: u32) -> BitVector {
    let len = rng.gen_range(0..=6);
    let coords: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=top)).collect();
    BitVector::from_support(&coords).unwrap()
}

fn group_suite() -> Outcome {
    let chain = universal_group_chain(GroupKind::Proper, &[16; 40]).unwrap();
    let top = chain.max_cutoff();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = |g: &BitVector, h: &BitVector| chain_metric(&chain, g, h).unwrap();
    let id = BitVector::identity();
    for t in 0..10_000 {
        let (g, h, k) = (random_vector(&mut rng, top), random_vector(&mut rng, top), random_vector(&mut rng, top));
        ensure(d(&k.add(&g), &k.add(&h)) == d(&g, &h), || format!("triple {t}: not left-invariant"))?;
        ensure(d(&g, &k) <= d(&g, &h).max(d(&h, &k)), || format!("triple {t}: not ultrametric"))?;
        ensure(d(&g.inverse(), &id) == d(&id, &g), || format!("triple {t}: inverse changes norm"))?;
        ensure(d(&g.add(&h), &id) <= d(&g, &id).max(d(&h, &id)), || format!("triple {t}: product bound"))?;
        ensure((d(&g, &h) == 0) == (g == h), || format!("triple {t}: zero distance"))?;
    }

    // metric balls around 1 are the subgroups
    let small = SubgroupChain::new(DistanceSet::new(vec![0, 1, 2, 3]).unwrap(), vec![1, 3, 4]).unwrap();
    let all: Vec<BitVector> = (0..16).map(|v| BitVector::from_bits(v, 0)).collect();
    for &a in small.levels().values() {
        for g in &all {
            let by_metric = chain_metric(&small, g, &id).unwrap() <= a;
            ensure(by_metric == small.contains(a, g), || format!("level {a}: ball differs from G_a at {g}"))?;
        }
    }
    for a in 0..=chain.top_level() {
        for _ in 0..50 {
            let g = random_vector(&mut rng, top);
            ensure((d(&g, &id) <= a) == chain.contains(a, &g), || format!("level {a}: ball differs from G_a"))?;
        }
    }

    let (mut annuli, mut boundary) = (0, 0);
    for round in 0..50 {
        let dset = gen_random_dset(&mut rng, 5);
        let n = rng.gen_range(1..=12);
        let x = PointedSpace::from_space(gen_random_ultrametric(rng.gen(), n, &dset).unwrap());
        let e = embed_into_group(&x, &chain).map_err(|e| format!("round {round}: {e}"))?;
        ensure(e.capacity_dominates, || format!("round {round}: ball profile exceeds capacities"))?;
        ensure(e.extensions.iter().all(|x| x.isometric), || format!("round {round}: extension not isometric"))?;
        ensure(e.map.parts.iter().all(|p| p.isometry.ok), || format!("round {round}: annulus not isometric"))?;
        ensure(e.map.injective, || format!("round {round}: not injective"))?;
        ensure(e.annuli.iter().all(|a| a.gap_condition), || format!("round {round}: gap condition fails"))?;
        let mut previous = 0;
        for (i, a) in e.annuli.iter().enumerate() {
            if e.annuli.len() > 1 {
                let bound = if i == 0 { a.radius } else { previous + a.diameter };
                ensure(a.gap > bound, || format!("round {round}: s_{} = {} ≤ {bound}", i + 1, a.gap))?;
            }
            previous = a.gap;
        }
        ensure(e.map.verified, || format!("round {round}: not verified"))?;
        annuli += e.annuli.len();
        boundary += e.extensions.iter().map(|x| x.boundary_pairs).sum::<usize>();
    }
    Ok(format!(
        "10000 triples, level round-trip, 50 embeddings ({annuli} annuli, {boundary} boundary pairs kept)"
    ))
}

/// Least over chains from `i` to `j` of the largest rounded-up hop.
fn minimax_oracle(m: &MetricSpace, i: usize, j: usize) -> u64 {
    fn walk(m: &MetricSpace, at: usize, goal: usize, seen: &mut Vec<bool>, worst: u64, best: &mut u64) {
        if worst >= *best {
            return;
        }
        if at == goal {
            *best = worst;
            return;
        }
        for next in 0..m.len() {
            if !seen[next] {
                seen[next] = true;
                walk(m, next, goal, seen, worst.max(m.dist(at, next).ceil() as u64), best);
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; m.len()];
    seen[i] = true;
    let mut best = u64::MAX;
    walk(m, i, j, &mut seen, 0, &mut best);
    if i == j {
        0
    } else {
        best
    }
}

fn ultrametrization() -> Outcome {
    let mut oracle_checks = 0;
    for seed in 0..200u64 {
        let n = 1 + seed as usize % 10;
        let m = gen_random_metric(seed, n).unwrap();
        let u = ultrametrize(&m);
        let report = validate_ultrametric(&u);
        ensure(report.ok, || format!("seed {seed}: {}", report.summary()))?;
        for i in 0..n {
            for j in 0..n {
                ensure(u.dist(i, j) <= m.dist(i, j).ceil() as u64, || format!("seed {seed}: above ceil(d)"))?;
            }
        }
        let again = ultrametrize(&MetricSpace::from(&u));
        ensure(again == u, || format!("seed {seed}: not idempotent"))?;
        if n <= 6 {
            for i in 0..n {
                for j in 0..n {
                    let want = minimax_oracle(&m, i, j);
                    ensure(u.dist(i, j) == want, || format!("seed {seed}: ({i},{j}) is {} not {want}", u.dist(i, j)))?;
                }
            }
            oracle_checks += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..200 {
        let x = random_pointed(&mut rng, 10, 8).into_space();
        ensure(same_by_label(&ultrametrize(&MetricSpace::from(&x)), &x), || format!("round {round}: integral ultrametric moved"))?;
    }
    Ok(format!("200 metrics, {oracle_checks} matched the chain oracle, 200 ultrametrics fixed"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("axioms of generated spaces and unions", axioms),
        ("universality of FU(m, D)", fu_universality),
        ("closed-form blocks equal recursive unions", closed_form_vs_recursion),
        ("decomposition round-trips", decomposition_round_trips),
        ("coarse disjoint unions of truncations", cdu_checker),
        ("embedding pipelines into CU and PU", pipelines),
        ("group suite", group_suite),
        ("ultrametrization", ultrametrization),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
