//! Small synthetic knowledge graphs with known relation patterns.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, RawTriple};

/// Relation ids of a [`toy_kg`] dataset.
#[derive(Debug, Clone)]
pub struct ToyKg {
    pub dataset: Dataset,
    /// `similar_to`: symmetric pairs.
    pub symmetric: usize,
    /// `(next, previous)`: an inverse pair.
    pub inverse: (usize, usize),
    /// `parent_of`: a three-level tree, root -> 4 -> 16.
    pub hierarchy: usize,
    /// `(next_next, next, next)`: `next_next` is `next` applied twice.
    pub composition: (usize, usize, usize),
}

pub const TOY_ENTITIES: usize = 100;

const PATHS: usize = 8;
const PATH_LEN: usize = 5;
const TREE_SIZE: usize = 1 + 4 + 16;

/// 100-entity graph with four relation patterns.
///
/// * `parent_of` over 21 entities (root, 4 children, 16 grandchildren); all edges are training edges.
/// * `next` / `previous` along 8 paths of 5 entities, mutually inverse.
/// * `next_next` links entities two steps apart on a path.
/// * `similar_to` on the remaining entities, paired up, both directions.
///
/// Validation and test only contain triples implied by training through a
/// pattern: the reverse of a symmetric pair, the inverse of a path edge (one
/// direction of every edge is kept in training), or a two-step path link.
pub fn toy_kg(seed: u64) -> ToyKg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names: Vec<String> = (0..TOY_ENTITIES).map(|i| format!("e{i:02}")).collect();
    names.shuffle(&mut rng);
    let ent = |i: usize| names[i].clone();
    let triple = |h: usize, r: &str, t: usize| RawTriple::new(ent(h), r, ent(t));

    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    // 0 -> train, 1 -> valid, 2 -> test
    let holdout = |rng: &mut ChaCha8Rng| -> u8 {
        let u: f64 = rng.random();
        if u < 0.15 {
            2
        } else if u < 0.25 {
            1
        } else {
            0
        }
    };
    let mut put = |slot: u8, t: RawTriple, train: &mut Vec<RawTriple>| match slot {
        0 => train.push(t),
        1 => valid.push(t),
        _ => test.push(t),
    };

    // tree first so every relation name appears early in training
    for child in 1..TREE_SIZE {
        let parent = if child <= 4 { 0 } else { 1 + (child - 5) / 4 };
        train.push(triple(parent, "parent_of", child));
    }

    let base = TREE_SIZE;
    for p in 0..PATHS {
        let node = |i: usize| base + p * PATH_LEN + i;
        for i in 0..PATH_LEN - 1 {
            // one of the two directions always stays in training
            let (a, b) = (node(i), node(i + 1));
            match holdout(&mut rng) {
                0 => {
                    train.push(triple(a, "next", b));
                    train.push(triple(b, "previous", a));
                }
                slot => {
                    if rng.random::<bool>() {
                        train.push(triple(a, "next", b));
                        put(slot, triple(b, "previous", a), &mut train);
                    } else {
                        train.push(triple(b, "previous", a));
                        put(slot, triple(a, "next", b), &mut train);
                    }
                }
            }
        }
        for i in 0..PATH_LEN - 2 {
            let slot = holdout(&mut rng);
            put(slot, triple(node(i), "next_next", node(i + 2)), &mut train);
        }
    }

    let rest: Vec<usize> = (base + PATHS * PATH_LEN..TOY_ENTITIES).collect();
    let mut pairs: Vec<(usize, usize)> = rest.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    if rest.len() % 2 == 1 {
        pairs.push((rest[rest.len() - 1], 0));
    }
    for (a, b) in pairs {
        let (a, b) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        train.push(triple(a, "similar_to", b));
        let slot = holdout(&mut rng);
        put(slot, triple(b, "similar_to", a), &mut train);
    }

    let dataset = Dataset::from_raw(&train, &valid, &test);
    let rel = |n: &str| dataset.vocab.relations.id(n).expect("relation present in training");
    let next = rel("next");
    ToyKg {
        symmetric: rel("similar_to"),
        inverse: (next, rel("previous")),
        hierarchy: rel("parent_of"),
        composition: (rel("next_next"), next, next),
        dataset,
    }
}

/// Tiny graph of `n_triples` random triples over `n_entities` entities and
/// `n_relations` relations, all in the test split (train gets one copy of
/// each so the vocabulary is complete). Duplicates are allowed.
pub fn random_kg(n_entities: usize, n_relations: usize, n_triples: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<RawTriple> = (0..n_triples)
        .map(|_| {
            RawTriple::new(
                format!("e{}", rng.random_range(0..n_entities)),
                format!("r{}", rng.random_range(0..n_relations)),
                format!("e{}", rng.random_range(0..n_entities)),
            )
        })
        .collect();
    let all: Vec<RawTriple> = (0..n_entities)
        .map(|e| RawTriple::new(format!("e{e}"), "r0", format!("e{e}")))
        .chain((0..n_relations).map(|r| RawTriple::new("e0", format!("r{r}"), "e0")))
        .collect();
    let mut ds = Dataset::from_raw(&all, &[], &triples);
    ds.train = ds.test.clone();
    ds
}
