use golde_core::data::FilterIndex;
use golde_core::evaluation::{rank_split, rank_triple, Side};
use golde_core::synthetic::random_kg;
use golde_core::{evaluate, per_relation_report, ManifoldConfig, Model};

fn manifold() -> ManifoldConfig {
    ManifoldConfig::parse_components("P4,Q4", 2).unwrap()
}

#[test]
fn all_ties_rank_at_the_middle() {
    let ds = random_kg(9, 2, 15, 1);
    let model = Model::zeros(manifold(), ds.num_entities(), ds.num_relations());
    for r in rank_split(&model, &ds.test, None).unwrap() {
        assert_eq!(r.rank, (9.0 + 1.0) / 2.0);
    }
}

#[test]
fn random_model_mean_rank_is_near_middle() {
    let n = 300;
    let ds = random_kg(n, 4, 400, 2);
    let model = Model::init(manifold(), ds.num_entities(), ds.num_relations(), 11);
    let ranks: Vec<f64> = rank_split(&model, &ds.test, None).unwrap().iter().map(|r| r.rank).collect();
    let mr = ranks.iter().sum::<f64>() / ranks.len() as f64;
    let mid = (n as f64 + 1.0) / 2.0;
    assert!((mr - mid).abs() < 0.1 * n as f64, "MR {mr} vs {mid}");
}

#[test]
fn filtered_rank_never_exceeds_raw_rank() {
    let ds = random_kg(12, 2, 20, 3);
    let filter = FilterIndex::build(&[&ds.test]);
    let model = Model::init(manifold(), ds.num_entities(), ds.num_relations(), 3);
    let raw = rank_split(&model, &ds.test, None).unwrap();
    let filtered = rank_split(&model, &ds.test, Some(&filter)).unwrap();
    let mut strictly_lower = 0;
    for (a, b) in raw.iter().zip(&filtered) {
        assert_eq!((a.triple, a.side), (b.triple, b.side));
        assert!(b.rank <= a.rank && b.rank >= 1.0);
        if b.rank < a.rank {
            strictly_lower += 1;
        }
    }
    assert!(strictly_lower > 0);
}

#[test]
fn best_scoring_triple_ranks_first() {
    let ds = random_kg(6, 1, 4, 5);
    let mut model = Model::zeros(manifold(), ds.num_entities(), ds.num_relations());
    // identity relation: the tail equal to the head is strictly best
    for e in 0..6 {
        let v: Vec<f64> = (0..model.config().stored_dim()).map(|i| (e * 7 + i) as f64 * 0.1).collect();
        model.entity_mut(e).copy_from_slice(&v);
    }
    let t = golde_core::Triple::new(2, 0, 2);
    assert_eq!(rank_triple(&model, t, None, Side::Tail).unwrap().rank, 1.0);
    assert_eq!(rank_triple(&model, t, None, Side::Head).unwrap().rank, 1.0);
}

#[test]
fn report_invariants_hold() {
    let ds = random_kg(20, 3, 40, 6);
    let filter = FilterIndex::build(&[&ds.test]);
    let model = Model::init(manifold(), ds.num_entities(), ds.num_relations(), 6);
    let m = evaluate(&model, &ds.test, &filter).unwrap();
    assert_eq!(m.samples, 80);
    assert!(m.mr >= 1.0 && (0.0..=1.0).contains(&m.mrr));
    assert!(m.hits1 <= m.hits3 && m.hits3 <= m.hits10 && m.hits10 <= 1.0);
    let groups = per_relation_report(&model, &ds.test, &filter, Some(&ds.vocab)).unwrap();
    assert_eq!(groups.iter().map(|g| g.triples).sum::<usize>(), ds.test.len());
    assert!(groups.iter().all(|g| g.name.is_some()));
}
