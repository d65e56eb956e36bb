mod common;

use common::{gnp, labeled_trees, permutations, rooted_trees_up_to, unrooted_trees};
use treelet_core::kernel::{count_colorful, DpContext};
use treelet_core::oracle::{count_colorful_exact, count_embeddings_exact};
use treelet_core::plan::{partition_template, CutPolicy};
use treelet_core::template::RootChoice;
use treelet_core::{Coloring, Template};

#[test]
fn tree_class_counts() {
    let counts: Vec<usize> = (1..=7).map(|n| unrooted_trees(n).len()).collect();
    assert_eq!(counts, [1, 1, 1, 2, 3, 6, 11]);
    assert_eq!(labeled_trees(5).len(), 125);
}

#[test]
fn every_rooting_matches_oracle_on_small_graphs() {
    let templates = rooted_trees_up_to(6);
    let mut checked = 0;
    for policy in [CutPolicy::CanonicalFirst, CutPolicy::SmallestChild] {
        for (ti, t) in templates.iter().enumerate() {
            let ctx = DpContext::new(partition_template(t, policy)).unwrap();
            for trial in 0..6u64 {
                let seed = (ti as u64) << 8 | trial;
                let n = 4 + (seed % 9) as usize;
                let g = gnp(n, 0.45, seed);
                let coloring = Coloring::random(n, t.n_vertices(), seed ^ 0xabc).unwrap();
                let dp = count_colorful(&g, &ctx, &coloring).unwrap();
                let exact = count_colorful_exact(&g, t, &coloring).unwrap();
                assert_eq!(dp, exact as f64, "template {:?} root {} graph seed {seed}", t.edges(), t.root());
                checked += 1;
            }
        }
    }
    assert!(checked > 300);
}

#[test]
fn rainbow_coloring_counts_every_copy() {
    // With k = n every vertex has its own color, so colorful = all copies.
    for t in rooted_trees_up_to(5).into_iter().filter(|t| t.n_vertices() == 5) {
        let g = gnp(5, 0.7, t.root() as u64);
        let coloring = Coloring::from_colors(5, vec![0, 1, 2, 3, 4]).unwrap();
        let ctx = DpContext::new(partition_template(&t, CutPolicy::default())).unwrap();
        assert_eq!(
            count_colorful(&g, &ctx, &coloring).unwrap(),
            count_embeddings_exact(&g, &t).unwrap() as f64
        );
    }
}

/// Brute-force rooted isomorphism: a vertex bijection fixing the roots that
/// maps edges onto edges.
fn rooted_isomorphic(a: &Template, b: &Template, perms: &[Vec<usize>]) -> bool {
    let n = a.n_vertices();
    if n != b.n_vertices() {
        return false;
    }
    let mut b_edges: Vec<(usize, usize)> = b.edges().iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
    b_edges.sort();
    perms.iter().any(|p| {
        if p[a.root()] != b.root() {
            return false;
        }
        let mut mapped: Vec<(usize, usize)> = a
            .edges()
            .iter()
            .map(|&(x, y)| (p[x].min(p[y]), p[x].max(p[y])))
            .collect();
        mapped.sort();
        mapped == b_edges
    })
}

#[test]
fn canonical_codes_decide_rooted_isomorphism() {
    for n in 1..=5 {
        let perms = permutations(n);
        let mut classes: Vec<Template> = Vec::new();
        let mut class_codes: Vec<String> = Vec::new();
        for edges in labeled_trees(n) {
            for r in 0..n {
                let t = Template::new(n, &edges, RootChoice::Vertex(r)).unwrap();
                let code = t.canonical_rooted_form(r);
                let class = classes.iter().position(|c| rooted_isomorphic(&t, c, &perms));
                match class {
                    Some(i) => assert_eq!(code, class_codes[i]),
                    None => {
                        assert!(!class_codes.contains(&code), "distinct classes share {code}");
                        classes.push(t);
                        class_codes.push(code);
                    }
                }
            }
        }
        // Rooted unlabeled trees on 1..=5 vertices: 1, 1, 2, 4, 9.
        assert_eq!(classes.len(), [1, 1, 2, 4, 9][n - 1]);
    }
}

#[test]
fn colorful_average_matches_probability() {
    // Mean colorful count over many colorings approaches copies * k!/k^k.
    let g = gnp(9, 0.5, 77);
    let t = Template::path(4);
    let total = count_embeddings_exact(&g, &t).unwrap() as f64;
    let p = 24.0 / 256.0;
    let trials = 10_000;
    let samples: Vec<f64> = (0..trials)
        .map(|s| {
            let c = Coloring::random(9, 4, s).unwrap();
            count_colorful_exact(&g, &t, &c).unwrap() as f64
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    let se = (var / trials as f64).sqrt();
    assert!((mean - total * p).abs() <= 3.0 * se, "mean {mean} expected {}", total * p);
}
