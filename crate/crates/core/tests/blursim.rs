use blurmm::blursim::{apply_fixed_blur, apply_scenario, assign_groups, default_groups, scenario_table, Scenario};
use blurmm::corpus::{Corpus, GroupName};
use blurmm::rng::RngSpec;
use blurmm::synth::CorpusSpec;

fn records(n_slides: usize, tiles: usize) -> Corpus {
    let spec = CorpusSpec { n_slides, tiles_per_slide: tiles, ..CorpusSpec::default() };
    Corpus::records_only(spec.records(&RngSpec::new(8))).unwrap()
}

#[test]
fn bookkeeping_and_group_ranges() {
    let corpus = records(50, 20);
    let groups = default_groups();
    for scenario in scenario_table() {
        let out = apply_scenario(&corpus, &scenario, &groups, &RngSpec::new(1)).unwrap();
        for r in out.records() {
            let g_i = r.g_i.unwrap();
            assert_eq!(r.g_hat.unwrap(), r.g + g_i);
            let group = groups.iter().find(|g| Some(g.name) == r.group).unwrap();
            assert!(group.sigma_lo <= g_i && g_i < group.sigma_hi, "{g_i} outside {group:?}");
        }
    }
}

#[test]
fn bookkeeping_accumulates_across_passes() {
    let corpus = apply_fixed_blur(&records(2, 4), 0.5).unwrap();
    let out = apply_fixed_blur(&corpus, 1.25).unwrap();
    for r in out.records() {
        assert_eq!((r.g, r.g_i, r.g_hat), (0.5, Some(1.25), Some(1.75)));
    }
}

#[test]
fn proportions_within_binomial_bounds() {
    let corpus = records(500, 24);
    let n = corpus.len() as f64;
    assert!(n >= 10_000.0);
    for scenario in scenario_table() {
        let names = assign_groups(&corpus, &scenario, &RngSpec::new(3));
        for (name, p) in [(GroupName::A, scenario.p_a), (GroupName::B, scenario.p_b), (GroupName::C, scenario.p_c)] {
            let count = names.iter().filter(|&&g| g == name).count() as f64;
            let bound = 4.0 * (n * p * (1.0 - p)).sqrt();
            assert!((count - n * p).abs() <= bound, "scenario {} group {name}: {count}", scenario.id);
        }
    }
}

#[test]
fn assignment_is_deterministic_and_seed_dependent() {
    let corpus = records(40, 10);
    let s = Scenario::new(99, 0.3, 0.3, 0.4).unwrap();
    let groups = default_groups();
    let a = apply_scenario(&corpus, &s, &groups, &RngSpec::new(5)).unwrap();
    let b = apply_scenario(&corpus, &s, &groups, &RngSpec::new(5)).unwrap();
    let c = apply_scenario(&corpus, &s, &groups, &RngSpec::new(6)).unwrap();
    assert_eq!(a.records(), b.records());
    assert_ne!(a.records(), c.records());
}

#[test]
fn assignment_ignores_slide_order() {
    let corpus = records(10, 10);
    let s = scenario_table()[4];
    let groups = default_groups();
    let mut reversed = corpus.records().to_vec();
    reversed.sort_by(|x, y| y.slide_id.cmp(&x.slide_id));
    let flipped = corpus.with_records(reversed).unwrap();
    let a = apply_scenario(&corpus, &s, &groups, &RngSpec::new(2)).unwrap();
    let b = apply_scenario(&flipped, &s, &groups, &RngSpec::new(2)).unwrap();
    let mut ra = a.records().to_vec();
    let mut rb = b.records().to_vec();
    ra.sort_by(|x, y| x.tile_id.cmp(&y.tile_id));
    rb.sort_by(|x, y| x.tile_id.cmp(&y.tile_id));
    assert_eq!(ra, rb);
}
