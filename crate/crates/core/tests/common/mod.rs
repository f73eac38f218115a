#![allow(dead_code)]

use std::path::PathBuf;

use adplan::{load_product, DirectionId, GripperId, PlanChromosome, ProductModel};

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture(rel: &str) -> ProductModel {
    let file = std::fs::File::open(fixture_path(rel)).unwrap();
    load_product(file).unwrap()
}

pub const ORACLE_FIXTURES: [&str; 10] = [
    "stack3", "peg3", "row4", "bracket4", "shaft5", "sandwich5", "box6", "tradeoff6", "bolted6", "hinge6",
];

pub fn oracle_fixture(name: &str) -> ProductModel {
    fixture(&format!("oracle/{name}.json"))
}

pub struct DpOptimum {
    pub value: i64,
    pub plan: PlanChromosome,
}

const UNREACHED: u16 = u16::MAX;

/// Exact optimum of `w1*l + w2*(N-1-o) + w3*(N-1-g)` for integer weights by
/// dynamic programming over (removed set, last direction, last gripper).
/// Independent of the crate's own search; only uses the model accessors.
pub fn subset_dp(model: &ProductModel, w: [i64; 3]) -> DpOptimum {
    let n = model.n();
    assert!(n > 0 && n <= 20, "subset DP supports 1..=20 parts");
    let nd = model.direction_count();
    let ng = model.gripper_catalog().len();
    let full: u32 = (1u32 << n) - 1;
    let blockers: Vec<Vec<u32>> = (0..n)
        .map(|p| {
            (0..nd)
                .map(|d| model.interference(DirectionId(d)).row(p).iter().fold(0u32, |m, j| m | (1 << j)))
                .collect()
        })
        .collect();
    let allowed: Vec<Vec<usize>> = (0..n).map(|p| model.allowed_grippers(p).iter().map(|g| g.0).collect()).collect();
    let stride = nd * ng;
    let mut cost = vec![UNREACHED; (full as usize + 1) * stride];
    let (w2, w3) = (w[1] as u16, w[2] as u16);

    let mut best: Option<(i64, u32, usize, usize)> = None;
    let base = (w[1] + w[2]) * (n as i64 - 1);
    for s in 0..=full {
        let row = cost[s as usize * stride..(s as usize + 1) * stride].to_vec();
        let mut m_all = UNREACHED;
        let mut m_d = vec![UNREACHED; nd];
        let mut m_g = vec![UNREACHED; ng];
        let mut arg = (0, 0);
        for d in 0..nd {
            for g in 0..ng {
                let c = row[d * ng + g];
                if c < m_all {
                    m_all = c;
                    arg = (d, g);
                }
                m_d[d] = m_d[d].min(c);
                m_g[g] = m_g[g].min(c);
            }
        }
        if s != 0 && m_all == UNREACHED {
            continue;
        }
        let stuck = (0..n).any(|p| s & (1 << p) == 0 && blockers[p].iter().any(|&b| b & !s != 0));
        if s == full || stuck {
            let c = if s == 0 { 0 } else { m_all as i64 };
            let value = w[0] * s.count_ones() as i64 + base - c;
            if best.map_or(true, |b| value > b.0) {
                best = Some((value, s, arg.0, arg.1));
            }
        }
        for p in (0..n).filter(|p| s & (1 << p) == 0) {
            let t = (s | (1 << p)) as usize;
            for d in (0..nd).filter(|&d| blockers[p][d] & !s == 0) {
                for &g in &allowed[p] {
                    let c = if s == 0 {
                        0
                    } else {
                        let via = [
                            row[d * ng + g],
                            m_d[d].saturating_add(w3),
                            m_g[g].saturating_add(w2),
                            m_all.saturating_add(w2 + w3),
                        ];
                        *via.iter().min().unwrap()
                    };
                    let slot = &mut cost[t * stride + d * ng + g];
                    *slot = (*slot).min(c);
                }
            }
        }
    }

    let (value, mut s, mut d, mut g) = best.expect("the empty prefix is always a candidate");
    let mut steps = Vec::new();
    while s != 0 {
        let c = cost[s as usize * stride + d * ng + g];
        let (p, pd, pg) = (0..n)
            .filter(|&p| s & (1 << p) != 0 && blockers[p][d] & !(s & !(1 << p)) == 0 && allowed[p].contains(&g))
            .find_map(|p| {
                let prev = s & !(1 << p);
                if prev == 0 {
                    return (c == 0).then_some((p, d, g));
                }
                (0..nd).flat_map(|d0| (0..ng).map(move |g0| (d0, g0))).find_map(|(d0, g0)| {
                    let pc = cost[prev as usize * stride + d0 * ng + g0];
                    let step = if d0 != d { w2 } else { 0 } + if g0 != g { w3 } else { 0 };
                    (pc != UNREACHED && pc + step == c).then_some((p, d0, g0))
                })
            })
            .expect("DP predecessor exists");
        steps.push((p, d, g));
        s &= !(1 << p);
        d = pd;
        g = pg;
    }
    steps.reverse();
    let mut plan = PlanChromosome { sequence: vec![], dirs: vec![], grips: vec![] };
    let removed: u32 = steps.iter().fold(0, |m, &(p, _, _)| m | (1 << p));
    for &(p, d, g) in &steps {
        plan.sequence.push(p);
        plan.dirs.push(DirectionId(d));
        plan.grips.push(GripperId(g));
    }
    if removed != full {
        let (bp, bd) = (0..n)
            .filter(|p| removed & (1 << p) == 0)
            .find_map(|p| (0..nd).find(|&d| blockers[p][d] & !removed != 0).map(|d| (p, d)))
            .unwrap();
        let rest = std::iter::once((bp, bd)).chain((0..n).filter(|&p| removed & (1 << p) == 0 && p != bp).map(|p| (p, 0)));
        for (p, d) in rest {
            plan.sequence.push(p);
            plan.dirs.push(DirectionId(d));
            plan.grips.push(GripperId(allowed[p][0]));
        }
    }
    DpOptimum { value, plan }
}

/// Random product: each (part, direction, blocker) entry set with
/// probability `density`, each part allowed a random non-empty gripper subset.
pub fn random_model(seed: u64, n: usize, directions: &[&str], grippers: &[&str], density: f64) -> ProductModel {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut b = adplan::ProductBuilder::new("random", n, directions, grippers);
    for part in 0..n {
        let allowed: Vec<&str> = grippers.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let allowed = if allowed.is_empty() { vec![grippers[rng.gen_range(0..grippers.len())]] } else { allowed };
        b = b.grippers(part, &allowed);
        for d in directions {
            for blocker in (0..n).filter(|&j| j != part) {
                if rng.gen_bool(density) {
                    b = b.block(part, d, blocker);
                }
            }
        }
    }
    b.build().unwrap()
}

/// The same product with component `i` renamed `perm[i]`.
pub fn relabel(model: &ProductModel, perm: &[usize]) -> ProductModel {
    let mut file = model.to_file();
    let n = perm.len();
    let mut components = file.components.clone();
    for (i, c) in file.components.iter().enumerate() {
        components[perm[i]] = adplan::product::ComponentRecord { id: perm[i], ..c.clone() };
    }
    file.components = components;
    for m in file.interference.values_mut().chain(file.contact.values_mut()).chain(file.connection.values_mut()) {
        let mut out = vec![vec![0u8; n]; n];
        for i in 0..n {
            for j in 0..n {
                out[perm[i]][perm[j]] = m[i][j];
            }
        }
        *m = out;
    }
    if let Some(steps) = file.reference_plan.as_mut() {
        for s in steps {
            s.part = perm[s.part];
        }
    }
    adplan::product::ProductModel::from_file(file).unwrap()
}
